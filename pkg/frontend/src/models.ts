/**
 * Model loading and penultimate-layer resolution.
 *
 * Known architecture names resolve through a local registry (a directory
 * of converted tfjs models, one subdirectory per name); --model-path
 * points at any model directory directly. The feature output is the last
 * layer before the classifier unless --layer overrides it, and the
 * chosen layer name is recorded in the exported file's model-name field.
 */

import { existsSync, mkdirSync, readFileSync, writeFileSync } from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

/** Per-architecture default input crop, overridable with --crop. */
export const DEFAULT_CROPS: Record<string, number> = {
  alexnet: 256,
  'vgg-16': 256,
  'vgg-19': 256,
  googlenet: 288,
  'resnet-152': 288,
}

export const MODEL_REGISTRY_ENV = 'DOCFUSION_MODEL_ROOT'

export function resolveModelDir(name: string, modelPath?: string): string {
  if (modelPath) return modelPath
  const root = process.env[MODEL_REGISTRY_ENV]
  if (root) {
    const candidate = path.join(root, name)
    if (existsSync(path.join(candidate, 'model.json'))) return candidate
  }
  throw new Error(
    `no weights available for model '${name}': pass --model-path or put a ` +
      `converted tfjs model under $${MODEL_REGISTRY_ENV}/${name}/model.json`,
  )
}

interface WeightsManifestEntry {
  paths: string[]
  weights: tf.io.WeightsManifestEntry[]
}

/** Minimal filesystem IOHandler; @tensorflow/tfjs ships none for node. */
export function fileSystemIO(dir: string): tf.io.IOHandler {
  return {
    async load(): Promise<tf.io.ModelArtifacts> {
      const modelJson = JSON.parse(readFileSync(path.join(dir, 'model.json'), 'utf-8'))
      const manifest: WeightsManifestEntry[] = modelJson.weightsManifest
      const weightSpecs: tf.io.WeightsManifestEntry[] = []
      const buffers: Buffer[] = []
      for (const group of manifest) {
        weightSpecs.push(...group.weights)
        for (const relative of group.paths) {
          buffers.push(readFileSync(path.join(dir, relative)))
        }
      }
      const weightData = Buffer.concat(buffers)
      return {
        modelTopology: modelJson.modelTopology,
        format: modelJson.format,
        generatedBy: modelJson.generatedBy,
        convertedBy: modelJson.convertedBy,
        weightSpecs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      }
    },
    async save(artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> {
      mkdirSync(dir, { recursive: true })
      const weightsManifest: WeightsManifestEntry[] = [
        { paths: ['weights.bin'], weights: artifacts.weightSpecs ?? [] },
      ]
      writeFileSync(
        path.join(dir, 'model.json'),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          format: artifacts.format ?? 'layers-model',
          generatedBy: artifacts.generatedBy ?? 'docfusion-exporter',
          convertedBy: artifacts.convertedBy ?? null,
          weightsManifest,
        }),
      )
      const weightData = artifacts.weightData as ArrayBuffer
      writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON',
        },
      }
    },
  }
}

export interface FeatureModel {
  /** model whose output is the penultimate (pre-classifier) activation */
  model: tf.LayersModel
  layerName: string
}

export async function loadFeatureModel(dir: string, layerName?: string): Promise<FeatureModel> {
  const full = await tf.loadLayersModel(fileSystemIO(dir))
  if (full.layers.length < 2) {
    throw new Error('model has no layer before its output to extract from')
  }
  const layer = layerName ? full.getLayer(layerName) : full.layers[full.layers.length - 2]
  const model = tf.model({ inputs: full.inputs, outputs: layer.output as tf.SymbolicTensor })
  return { model, layerName: layer.name }
}
