// Encoder registry: a deterministic reference encoder for offline use and
// tests, and a CLIP encoder backed by transformers.js for real extraction.

import { createHash } from 'crypto';
import { readFile } from 'fs/promises';

export interface Encoder {
  readonly name: string;
  /** Embedding width; known after init() resolves. */
  dim: number;
  init(): Promise<void>;
  /** One unit float64 vector per text. */
  encodeTexts(texts: string[]): Promise<Float64Array[]>;
  /** One unit float64 vector per path; null marks an unreadable image. */
  encodeImages(paths: string[]): Promise<(Float64Array | null)[]>;
}

export function createEncoder(name: string): Encoder {
  if (name === 'ref-64') return new ReferenceEncoder();
  if (name === 'clip-vit-b-32') return new ClipEncoder('Xenova/clip-vit-base-patch32');
  if (name.includes('/')) return new ClipEncoder(name);
  throw new Error(`unknown encoder ${name} (use ref-64, clip-vit-b-32, or a CLIP model path)`);
}

export function l2Normalize(vector: Float64Array): Float64Array {
  let sum = 0;
  for (const x of vector) sum += x * x;
  const norm = Math.sqrt(sum);
  if (!(norm > 0)) throw new Error('cannot normalize a zero vector');
  return vector.map((x) => x / norm) as Float64Array;
}

/**
 * Deterministic content-hash encoder (dim 64).
 *
 * Each input maps to a unit vector whose entries are Gaussian draws expanded
 * from the SHA-256 of the content, so identical inputs always produce
 * identical embeddings on every platform. No semantic structure is implied;
 * it exists to exercise the extraction pipeline without model weights.
 */
export class ReferenceEncoder implements Encoder {
  readonly name = 'ref-64';
  dim = 64;

  async init(): Promise<void> {}

  async encodeTexts(texts: string[]): Promise<Float64Array[]> {
    return texts.map((text) => this.fromSeed(`text\0${text}`));
  }

  async encodeImages(paths: string[]): Promise<(Float64Array | null)[]> {
    const out: (Float64Array | null)[] = [];
    for (const path of paths) {
      try {
        const data = await readFile(path);
        out.push(this.fromDigest(createHash('sha256').update('image\0').update(data).digest()));
      } catch {
        out.push(null);
      }
    }
    return out;
  }

  private fromSeed(seed: string): Float64Array {
    return this.fromDigest(createHash('sha256').update(seed, 'utf-8').digest());
  }

  private fromDigest(digest: Buffer): Float64Array {
    const vector = new Float64Array(this.dim);
    let block = Buffer.alloc(0);
    let blockIndex = 0;
    let cursor = 0;
    const nextUniform = (): number => {
      if (cursor + 4 > block.length) {
        const counter = Buffer.alloc(4);
        counter.writeUInt32LE(blockIndex++, 0);
        block = createHash('sha256').update(digest).update(counter).digest();
        cursor = 0;
      }
      const value = block.readUInt32LE(cursor);
      cursor += 4;
      return (value + 1) / 4294967297; // strictly inside (0, 1)
    };
    for (let i = 0; i < this.dim; i += 2) {
      const radius = Math.sqrt(-2 * Math.log(nextUniform()));
      const angle = 2 * Math.PI * nextUniform();
      vector[i] = radius * Math.cos(angle);
      if (i + 1 < this.dim) vector[i + 1] = radius * Math.sin(angle);
    }
    return l2Normalize(vector);
  }
}

/**
 * CLIP encoder (transformers.js). Needs model weights: either network access
 * to the model hub or a local cache/dir configured via the standard
 * transformers.js environment settings.
 */
export class ClipEncoder implements Encoder {
  readonly name: string;
  dim = 0;
  private tokenizer: any;
  private processor: any;
  private textModel: any;
  private visionModel: any;
  private rawImage: any;

  constructor(private readonly modelId: string) {
    this.name = modelId;
  }

  async init(): Promise<void> {
    let tf: any;
    try {
      const moduleId = '@xenova/transformers'; // optional dependency
      tf = await import(moduleId);
    } catch {
      throw new Error(
        `encoder ${this.name} needs the optional dependency @xenova/transformers ` +
          'plus reachable model weights; install it with `npm install @xenova/transformers` ' +
          'or use the offline encoder ref-64',
      );
    }
    this.rawImage = tf.RawImage;
    this.tokenizer = await tf.AutoTokenizer.from_pretrained(this.modelId);
    this.processor = await tf.AutoProcessor.from_pretrained(this.modelId);
    this.textModel = await tf.CLIPTextModelWithProjection.from_pretrained(this.modelId, {
      quantized: false,
    });
    this.visionModel = await tf.CLIPVisionModelWithProjection.from_pretrained(this.modelId, {
      quantized: false,
    });
  }

  async encodeTexts(texts: string[]): Promise<Float64Array[]> {
    const inputs = this.tokenizer(texts, { padding: true, truncation: true });
    const { text_embeds } = await this.textModel(inputs);
    return this.splitRows(text_embeds, texts.length);
  }

  async encodeImages(paths: string[]): Promise<(Float64Array | null)[]> {
    const images = [];
    const readable: number[] = [];
    for (let i = 0; i < paths.length; i++) {
      try {
        images.push(await this.rawImage.read(paths[i]));
        readable.push(i);
      } catch {
        // unreadable or undecodable image: caller records the skip
      }
    }
    const out: (Float64Array | null)[] = paths.map(() => null);
    if (!images.length) return out;
    const inputs = await this.processor(images);
    const { image_embeds } = await this.visionModel(inputs);
    const rows = this.splitRows(image_embeds, images.length);
    readable.forEach((target, i) => {
      out[target] = rows[i];
    });
    return out;
  }

  private splitRows(tensor: any, count: number): Float64Array[] {
    const width = tensor.dims[tensor.dims.length - 1];
    if (!this.dim) this.dim = width;
    const data: Float32Array = tensor.data;
    return Array.from({ length: count }, (_, r) =>
      l2Normalize(Float64Array.from(data.subarray(r * width, (r + 1) * width))),
    );
  }
}
