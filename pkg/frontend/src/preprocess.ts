/**
 * Raster to network input: resize the shorter side to the crop size,
 * center-crop to a square, optional grayscale, scale to [0, 1] and
 * subtract the per-channel mean.
 */

import * as tf from '@tensorflow/tfjs'
import { Raster } from './images'

export interface PreprocessOptions {
  cropSize: number
  grayscale: boolean
  /** per-channel mean subtracted after scaling to [0, 1] */
  channelMean: number[]
}

export function preprocessRaster(raster: Raster, options: PreprocessOptions): tf.Tensor3D {
  const { cropSize, grayscale, channelMean } = options
  if (raster.width < 1 || raster.height < 1) {
    throw new Error('cannot preprocess an empty raster')
  }
  return tf.tidy(() => {
    let image = tf.tensor3d(raster.data, [raster.height, raster.width, 3], 'float32')
    if (grayscale) {
      // ITU-R 601 luma, kept as a single channel
      const [r, g, b] = tf.split(image, 3, 2)
      image = r.mul(0.299).add(g.mul(0.587)).add(b.mul(0.114))
    }
    const short = Math.min(raster.width, raster.height)
    if (short !== cropSize) {
      const scale = cropSize / short
      const height = raster.height <= raster.width ? cropSize : Math.max(1, Math.round(raster.height * scale))
      const width = raster.width < raster.height ? cropSize : Math.max(1, Math.round(raster.width * scale))
      image = tf.image.resizeBilinear(image as tf.Tensor3D, [height, width])
    }
    const [height, width] = image.shape
    const top = Math.floor((height - cropSize) / 2)
    const left = Math.floor((width - cropSize) / 2)
    const cropped = tf.slice(image, [top, left, 0], [cropSize, cropSize, image.shape[2]])
    const scaled = cropped.div(255.0)
    const mean = tf.tensor3d(
      new Float32Array(channelMean),
      [1, 1, channelMean.length],
      'float32',
    )
    return scaled.sub(mean) as tf.Tensor3D
  })
}
