/**
 * Binary feature interchange format ("FCBF") shared with the retrieval
 * engine. Little-endian throughout:
 *
 *   magic "FCBF" | version u16 = 1 | model-name length u16 + UTF-8 |
 *   crop_size u32 | n u64 | d u64 |
 *   n image-id records (length u16 + UTF-8, canonical bytewise order) |
 *   n*d float32 values, row-major
 */

export interface FeatureFile {
  modelName: string
  cropSize: number
  ids: string[]
  dim: number
  values: Float32Array // row-major, ids.length * dim
}

export const FCBF_MAGIC = 'FCBF'
export const FCBF_VERSION = 1

/** Bytewise UTF-8 ordering; the canonical row order everywhere. */
export function compareIds(a: string, b: string): number {
  return Buffer.compare(Buffer.from(a, 'utf-8'), Buffer.from(b, 'utf-8'))
}

function packString(value: string): Buffer {
  const data = Buffer.from(value, 'utf-8')
  if (data.length > 0xffff) {
    throw new Error(`string too long for u16 length prefix: ${value.slice(0, 32)}...`)
  }
  const out = Buffer.alloc(2 + data.length)
  out.writeUInt16LE(data.length, 0)
  data.copy(out, 2)
  return out
}

export function encodeFeatureFile(file: FeatureFile): Buffer {
  const { modelName, cropSize, ids, dim, values } = file
  if (values.length !== ids.length * dim) {
    throw new Error(`payload has ${values.length} values, expected ${ids.length * dim}`)
  }
  for (let i = 1; i < ids.length; i++) {
    if (compareIds(ids[i - 1], ids[i]) >= 0) {
      throw new Error(`image ids not in canonical order at ${ids[i]}`)
    }
  }
  for (const v of values) {
    if (!Number.isFinite(v)) throw new Error('feature values must be finite')
  }

  const header = Buffer.alloc(4 + 2)
  header.write(FCBF_MAGIC, 0, 'ascii')
  header.writeUInt16LE(FCBF_VERSION, 4)

  const meta = Buffer.alloc(4 + 8 + 8)
  meta.writeUInt32LE(cropSize, 0)
  meta.writeBigUInt64LE(BigInt(ids.length), 4)
  meta.writeBigUInt64LE(BigInt(dim), 12)

  const payload = Buffer.alloc(values.length * 4)
  for (let i = 0; i < values.length; i++) payload.writeFloatLE(values[i], i * 4)

  return Buffer.concat([
    header,
    packString(modelName),
    meta,
    ...ids.map(packString),
    payload,
  ])
}

/** Decoder used for validation and tests; mirrors the engine's reader. */
export function decodeFeatureFile(blob: Buffer): FeatureFile {
  if (blob.subarray(0, 4).toString('ascii') !== FCBF_MAGIC) {
    throw new Error('bad magic, not a feature interchange file')
  }
  let offset = 4
  const version = blob.readUInt16LE(offset)
  offset += 2
  if (version !== FCBF_VERSION) throw new Error(`unsupported version ${version}`)

  const nameLength = blob.readUInt16LE(offset)
  offset += 2
  const modelName = blob.subarray(offset, offset + nameLength).toString('utf-8')
  offset += nameLength
  const cropSize = blob.readUInt32LE(offset)
  offset += 4
  const n = Number(blob.readBigUInt64LE(offset))
  offset += 8
  const dim = Number(blob.readBigUInt64LE(offset))
  offset += 8

  const ids: string[] = []
  for (let i = 0; i < n; i++) {
    const idLength = blob.readUInt16LE(offset)
    offset += 2
    ids.push(blob.subarray(offset, offset + idLength).toString('utf-8'))
    offset += idLength
  }
  const values = new Float32Array(n * dim)
  for (let i = 0; i < values.length; i++) {
    values[i] = blob.readFloatLE(offset)
    offset += 4
  }
  if (offset !== blob.length) throw new Error('trailing bytes after payload')
  return { modelName, cropSize, ids, dim, values }
}
