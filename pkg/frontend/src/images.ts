/** PNG/JPEG decoding to plain RGB rasters, no native bindings. */

import { readFileSync } from 'fs'
import * as path from 'path'
import { PNG } from 'pngjs'
import * as jpeg from 'jpeg-js'

export interface Raster {
  width: number
  height: number
  /** RGB, row-major, 3 bytes per pixel */
  data: Uint8Array
}

export const IMAGE_EXTENSIONS = ['.png', '.jpg', '.jpeg']

function rgbaToRgb(rgba: Uint8Array | Buffer, pixels: number): Uint8Array {
  const rgb = new Uint8Array(pixels * 3)
  for (let i = 0; i < pixels; i++) {
    rgb[i * 3] = rgba[i * 4]
    rgb[i * 3 + 1] = rgba[i * 4 + 1]
    rgb[i * 3 + 2] = rgba[i * 4 + 2]
  }
  return rgb
}

export function decodeImage(filePath: string): Raster {
  const ext = path.extname(filePath).toLowerCase()
  const blob = readFileSync(filePath)
  if (ext === '.png') {
    const png = PNG.sync.read(blob)
    return {
      width: png.width,
      height: png.height,
      data: rgbaToRgb(png.data, png.width * png.height),
    }
  }
  if (ext === '.jpg' || ext === '.jpeg') {
    const decoded = jpeg.decode(blob, { useTArray: true, formatAsRGBA: true })
    return {
      width: decoded.width,
      height: decoded.height,
      data: rgbaToRgb(decoded.data, decoded.width * decoded.height),
    }
  }
  throw new Error(`unsupported image extension: ${filePath}`)
}

export function encodePng(raster: Raster): Buffer {
  const png = new PNG({ width: raster.width, height: raster.height })
  for (let i = 0; i < raster.width * raster.height; i++) {
    png.data[i * 4] = raster.data[i * 3]
    png.data[i * 4 + 1] = raster.data[i * 3 + 1]
    png.data[i * 4 + 2] = raster.data[i * 3 + 2]
    png.data[i * 4 + 3] = 255
  }
  return PNG.sync.write(png)
}
