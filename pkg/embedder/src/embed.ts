// Folder-to-pool extraction: encode every image under one subdirectory per
// class, pair them with prompt-text prototypes, and write a SASE file.

import { readdir, rename, stat, writeFile } from 'fs/promises';
import * as path from 'path';

import { Encoder } from './encoders.js';
import { Pool, poolToBytes } from './sase.js';

export function classPrompt(className: string): string {
  return `A photo of a ${className}`;
}

export interface EmbedOptions {
  imageRoot: string;
  classNames: string[];
  encoder: Encoder;
  output: string;
  batchSize?: number;
}

export interface EmbedResult {
  dim: number;
  nImages: number;
  nSkipped: number;
  skipped: string[];
}

export async function embedDataset(options: EmbedOptions): Promise<EmbedResult> {
  const { imageRoot, classNames, encoder, output } = options;
  const batchSize = options.batchSize ?? 16;
  if (classNames.length < 2) throw new Error('need at least 2 class names');

  const missing: string[] = [];
  for (const name of classNames) {
    const dir = path.join(imageRoot, name);
    try {
      if (!(await stat(dir)).isDirectory()) missing.push(name);
    } catch {
      missing.push(name);
    }
  }
  if (missing.length)
    throw new Error(`missing class subdirectories under ${imageRoot}: ${missing.join(', ')}`);

  await encoder.init();
  const prototypes = await encoder.encodeTexts(classNames.map(classPrompt));

  const imageIds: string[] = [];
  const labels: number[] = [];
  const features: Float64Array[] = [];
  const skipped: string[] = [];
  for (let c = 0; c < classNames.length; c++) {
    const dir = path.join(imageRoot, classNames[c]);
    const entries = (await readdir(dir, { withFileTypes: true }))
      .filter((entry) => entry.isFile())
      .map((entry) => entry.name)
      .sort(); // deterministic file order
    for (let start = 0; start < entries.length; start += batchSize) {
      const batch = entries.slice(start, start + batchSize);
      const paths = batch.map((name) => path.join(dir, name));
      const vectors = await encoder.encodeImages(paths);
      vectors.forEach((vector, i) => {
        const id = `${classNames[c]}/${batch[i]}`;
        if (vector === null) {
          skipped.push(id);
          return;
        }
        imageIds.push(id);
        labels.push(c);
        features.push(vector);
      });
    }
  }

  const pool: Pool = {
    dim: encoder.dim,
    classNames: [...classNames],
    prototypes: prototypes.map((row) => Float32Array.from(row)),
    imageIds,
    labels,
    features: features.map((row) => Float32Array.from(row)),
  };
  const data = poolToBytes(pool);

  const tmp = `${output}.tmp-${process.pid}`;
  await writeFile(tmp, data);
  await rename(tmp, output);

  return { dim: encoder.dim, nImages: imageIds.length, nSkipped: skipped.length, skipped };
}
