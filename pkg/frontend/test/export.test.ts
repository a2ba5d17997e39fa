import { execFileSync } from 'child_process'
import { mkdirSync, mkdtempSync, readFileSync, writeFileSync } from 'fs'
import { tmpdir } from 'os'
import * as path from 'path'

import * as tf from '@tensorflow/tfjs'
import { beforeAll, describe, expect, it } from 'vitest'

import { decodeFeatureFile } from '../src/fcbf'
import { encodePng } from '../src/images'
import { fileSystemIO } from '../src/models'
import { runExport } from '../src/export'

const CROP = 16
const FEATURE_DIM = 8

function mulberry32(seed: number): () => number {
  return () => {
    seed |= 0
    seed = (seed + 0x6d2b79f5) | 0
    let t = Math.imul(seed ^ (seed >>> 15), 1 | seed)
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

/** Tiny convnet with seeded weights; dense layer before the classifier
 *  is the feature output the exporter should pick. */
async function buildTinyModel(dir: string): Promise<void> {
  const model = tf.sequential({
    layers: [
      tf.layers.conv2d({
        inputShape: [CROP, CROP, 1],
        filters: 4,
        kernelSize: 3,
        activation: 'relu',
      }),
      tf.layers.maxPooling2d({ poolSize: 2 }),
      tf.layers.flatten(),
      tf.layers.dense({ units: FEATURE_DIM, activation: 'tanh', name: 'features' }),
      tf.layers.dense({ units: 3, activation: 'softmax', name: 'classifier' }),
    ],
  })
  const rand = mulberry32(1234)
  model.setWeights(
    model.getWeights().map((w) => {
      const data = new Float32Array(w.size)
      for (let i = 0; i < data.length; i++) data[i] = 2 * rand() - 1
      return tf.tensor(data, w.shape)
    }),
  )
  await model.save(fileSystemIO(dir))
}

function writeNoisePngs(dir: string, ids: string[]): void {
  mkdirSync(dir, { recursive: true })
  const rand = mulberry32(99)
  for (const id of ids) {
    const data = new Uint8Array(24 * 20 * 3)
    for (let i = 0; i < data.length; i++) data[i] = Math.floor(rand() * 256)
    writeFileSync(path.join(dir, `${id}.png`), encodePng({ width: 20, height: 24, data }))
  }
}

function python(args: string[], cwd: string): string {
  return execFileSync('python3', ['-m', 'docfusion', ...args], {
    cwd,
    encoding: 'utf-8',
  })
}

describe('exporter', () => {
  let root: string
  let modelDir: string
  let imagesDir: string
  const ids = ['page-aa', 'page-ab', 'page-ba', 'scan-01', 'scan-02']

  beforeAll(async () => {
    root = mkdtempSync(path.join(tmpdir(), 'docfusion-export-'))
    modelDir = path.join(root, 'model')
    imagesDir = path.join(root, 'images')
    await buildTinyModel(modelDir)
    writeNoisePngs(imagesDir, ids)
  })

  it('writes a valid file with canonical ids and the layer recorded', async () => {
    const outPath = path.join(root, 'tiny.fcbf')
    const { n, dim } = await runExport({
      imagesDir,
      modelName: 'tiny',
      modelPath: modelDir,
      cropSize: CROP,
      outPath,
      batchSize: 2,
      grayscale: true,
      skipBad: false,
    })
    expect(n).toBe(5)
    expect(dim).toBe(FEATURE_DIM)
    const decoded = decodeFeatureFile(readFileSync(outPath))
    expect(decoded.ids).toEqual([...ids].sort())
    expect(decoded.dim).toBe(FEATURE_DIM)
    expect(decoded.modelName).toBe('tiny:features')
    expect(decoded.cropSize).toBe(CROP)
    expect(Array.from(decoded.values).every(Number.isFinite)).toBe(true)
    // distinct images should not collapse to one feature vector
    const first = Array.from(decoded.values.slice(0, FEATURE_DIM))
    const second = Array.from(decoded.values.slice(FEATURE_DIM, 2 * FEATURE_DIM))
    expect(first).not.toEqual(second)
  })

  it('re-exports byte-identically', async () => {
    const a = path.join(root, 'rerun-a.fcbf')
    const b = path.join(root, 'rerun-b.fcbf')
    for (const outPath of [a, b]) {
      await runExport({
        imagesDir,
        modelName: 'tiny',
        modelPath: modelDir,
        cropSize: CROP,
        outPath,
        batchSize: 3,
        grayscale: true,
        skipBad: false,
      })
    }
    expect(readFileSync(a).equals(readFileSync(b))).toBe(true)
  })

  it('handles an empty directory as a valid n=0 file', async () => {
    const emptyDir = path.join(root, 'empty')
    mkdirSync(emptyDir, { recursive: true })
    const outPath = path.join(root, 'empty.fcbf')
    const { n, dim } = await runExport({
      imagesDir: emptyDir,
      modelName: 'tiny',
      modelPath: modelDir,
      cropSize: CROP,
      outPath,
      batchSize: 4,
      grayscale: true,
      skipBad: false,
    })
    expect(n).toBe(0)
    expect(dim).toBe(FEATURE_DIM)
    const decoded = decodeFeatureFile(readFileSync(outPath))
    expect(decoded.ids).toEqual([])
    expect(decoded.dim).toBe(FEATURE_DIM)
  })

  it('skips undecodable images only when asked', async () => {
    const mixedDir = path.join(root, 'mixed')
    writeNoisePngs(mixedDir, ['good-1', 'good-2'])
    writeFileSync(path.join(mixedDir, 'broken.png'), Buffer.from('not a png'))
    await expect(
      runExport({
        imagesDir: mixedDir,
        modelName: 'tiny',
        modelPath: modelDir,
        cropSize: CROP,
        outPath: path.join(root, 'mixed-fail.fcbf'),
        batchSize: 4,
        grayscale: true,
        skipBad: false,
      }),
    ).rejects.toThrow()
    const outPath = path.join(root, 'mixed-ok.fcbf')
    const { n } = await runExport({
      imagesDir: mixedDir,
      modelName: 'tiny',
      modelPath: modelDir,
      cropSize: CROP,
      outPath,
      batchSize: 4,
      grayscale: true,
      skipBad: true,
    })
    expect(n).toBe(2)
    expect(decodeFeatureFile(readFileSync(outPath)).ids).toEqual(['good-1', 'good-2'])
  })

  it('passes the retrieval engine end to end: validate, index, self-query', async () => {
    const exported = path.join(root, 'conformance.fcbf')
    await runExport({
      imagesDir,
      modelName: 'tiny',
      modelPath: modelDir,
      cropSize: CROP,
      outPath: exported,
      batchSize: 2,
      grayscale: true,
      skipBad: false,
    })

    const work = path.join(root, 'engine')
    mkdirSync(work, { recursive: true })
    const sorted = [...ids].sort()
    writeFileSync(path.join(work, 'manifest.txt'), sorted.join('\n') + '\n')
    writeFileSync(
      path.join(work, 'config.json'),
      JSON.stringify({
        target_dim: 4,
        normalize: true,
        models: [
          {
            name: 'tiny',
            crop_size: CROP,
            backend: { kind: 'file', path: exported },
          },
        ],
      }),
    )
    writeFileSync(
      path.join(work, 'weights.tsv'),
      'model\trank_score\tweight\ntiny\t1.0\t1.0\n',
    )

    // extract validates the exporter's file and realigns it to the manifest
    python(
      ['extract', '--config', 'config.json', '--manifest', 'manifest.txt', '--out', 'feat'],
      work,
    )
    const roundTripped = decodeFeatureFile(readFileSync(path.join(work, 'feat', 'tiny.fcbf')))
    expect(roundTripped.ids).toEqual(sorted)
    expect(roundTripped.dim).toBe(FEATURE_DIM)

    python(
      ['reduce', '--config', 'config.json', '--features', 'feat', '--out', 'red'],
      work,
    )
    python(
      ['index', '--config', 'config.json', '--reduced', 'red', '--weights', 'weights.tsv', '--out', 'idx'],
      work,
    )
    for (const id of sorted) {
      const tsv = python(
        [
          'query',
          '--index', path.join('idx', 'fused.fcix'),
          '--features', path.join('red', 'tiny.fcbf'),
          '--id', id,
          '--k', '3',
        ],
        work,
      )
      const [rank, hitId] = tsv.split('\n')[0].split('\t')
      expect(rank).toBe('1')
      expect(hitId).toBe(id)
    }
  }, 120000)
})
