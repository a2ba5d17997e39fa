#!/usr/bin/env node
/**
 * Batch feature export: run a CNN over a directory of document images and
 * write penultimate-layer activations in the engine's interchange format.
 *
 *   docfusion-export --images <dir> --model <name> [--model-path <dir>]
 *                    [--crop <px>] --out <file> [--batch <n>]
 *                    [--layer <name>] [--grayscale] [--skip-bad]
 *
 * Rows are written in canonical (bytewise id) order; re-running on the
 * same inputs produces the same bytes.
 */

import { readdirSync, writeFileSync } from 'fs'
import * as path from 'path'
import { parseArgs } from 'node:util'
import * as tf from '@tensorflow/tfjs'

import { compareIds, encodeFeatureFile } from './fcbf'
import { IMAGE_EXTENSIONS, decodeImage } from './images'
import { preprocessRaster } from './preprocess'
import { DEFAULT_CROPS, loadFeatureModel, resolveModelDir } from './models'

export interface ExportJob {
  imagesDir: string
  modelName: string
  modelPath?: string
  cropSize?: number
  outPath: string
  batchSize: number
  layerName?: string
  grayscale: boolean
  channelMean?: number[]
  skipBad: boolean
}

interface ImageEntry {
  id: string
  file: string
}

function listImages(dir: string): ImageEntry[] {
  const entries: ImageEntry[] = []
  const seen = new Map<string, string>()
  for (const name of readdirSync(dir)) {
    const ext = path.extname(name).toLowerCase()
    if (!IMAGE_EXTENSIONS.includes(ext)) continue
    const id = path.basename(name, path.extname(name))
    const clash = seen.get(id)
    if (clash) {
      throw new Error(`duplicate image id '${id}' (${clash} and ${name})`)
    }
    seen.set(id, name)
    entries.push({ id, file: path.join(dir, name) })
  }
  entries.sort((a, b) => compareIds(a.id, b.id))
  return entries
}

export async function runExport(job: ExportJob): Promise<{ n: number; dim: number }> {
  const cropSize = job.cropSize ?? DEFAULT_CROPS[job.modelName] ?? 256
  const channels = job.grayscale ? 1 : 3
  const channelMean = job.channelMean ?? new Array(channels).fill(0.5)
  if (channelMean.length !== channels) {
    throw new Error(`channel mean has ${channelMean.length} entries, expected ${channels}`)
  }

  const modelDir = resolveModelDir(job.modelName, job.modelPath)
  const { model, layerName } = await loadFeatureModel(modelDir, job.layerName)
  const recordedName = `${job.modelName}:${layerName}`

  let entries = listImages(job.imagesDir)
  if (job.skipBad) {
    const usable: ImageEntry[] = []
    for (const entry of entries) {
      try {
        decodeImage(entry.file)
        usable.push(entry)
      } catch (err) {
        console.warn(`skipping undecodable image ${entry.file}: ${(err as Error).message}`)
      }
    }
    entries = usable
  }

  // feature width from the model signature so empty exports stay typed
  let dim = 1
  for (const side of model.outputs[0].shape.slice(1)) dim *= side ?? 0

  const rows: Float32Array[] = []
  for (let start = 0; start < entries.length; start += job.batchSize) {
    const batch = entries.slice(start, start + job.batchSize)
    const inputs = batch.map((entry) =>
      preprocessRaster(decodeImage(entry.file), {
        cropSize,
        grayscale: job.grayscale,
        channelMean,
      }),
    )
    const stacked = tf.stack(inputs)
    inputs.forEach((t) => t.dispose())
    const output = model.predict(stacked) as tf.Tensor
    stacked.dispose()
    const flat = output.reshape([batch.length, -1])
    output.dispose()
    const batchDim = flat.shape[1] ?? 0
    if (dim > 0 && batchDim !== dim) {
      throw new Error(`model produced ${batchDim} features, expected ${dim}`)
    }
    dim = batchDim
    const data = (await flat.data()) as Float32Array
    flat.dispose()
    for (let i = 0; i < batch.length; i++) {
      rows.push(data.slice(i * dim, (i + 1) * dim))
    }
  }

  const values = new Float32Array(entries.length * dim)
  rows.forEach((row, i) => values.set(row, i * dim))
  const blob = encodeFeatureFile({
    modelName: recordedName,
    cropSize,
    ids: entries.map((e) => e.id),
    dim,
    values,
  })
  writeFileSync(job.outPath, blob)
  return { n: entries.length, dim }
}

export function parseCli(argv: string[]): ExportJob {
  const { values } = parseArgs({
    args: argv,
    options: {
      images: { type: 'string' },
      model: { type: 'string' },
      'model-path': { type: 'string' },
      crop: { type: 'string' },
      out: { type: 'string' },
      batch: { type: 'string', default: '16' },
      layer: { type: 'string' },
      grayscale: { type: 'boolean', default: false },
      'skip-bad': { type: 'boolean', default: false },
    },
  })
  if (!values.images || !values.model || !values.out) {
    throw new Error('usage: docfusion-export --images <dir> --model <name> --out <file>')
  }
  return {
    imagesDir: values.images,
    modelName: values.model,
    modelPath: values['model-path'],
    cropSize: values.crop ? Number(values.crop) : undefined,
    outPath: values.out,
    batchSize: Number(values.batch),
    layerName: values.layer,
    grayscale: values.grayscale ?? false,
    skipBad: values['skip-bad'] ?? false,
  }
}

async function main() {
  try {
    const job = parseCli(process.argv.slice(2))
    const { n, dim } = await runExport(job)
    console.log(`wrote ${job.outPath}: ${n} images, ${dim} features each`)
  } catch (err) {
    console.error(`docfusion-export: ${(err as Error).message}`)
    process.exitCode = 1
  }
}

if (require.main === module) {
  void main()
}
