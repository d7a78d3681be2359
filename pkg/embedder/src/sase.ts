// SASE embedding-pool binary format: writer plus a minimal reader for tests.
// Layout (all integers little-endian):
//   magic "SASE" | u32 version=1 | u32 dim | u32 nClasses | u64 nImages
//   class names  : nClasses x (u32 byte length + UTF-8 bytes)
//   prototypes   : nClasses x dim float32
//   image ids    : nImages  x (u32 byte length + UTF-8 bytes)
//   labels       : nImages  x u32
//   features     : nImages  x dim float32

export interface Pool {
  dim: number;
  classNames: string[];
  prototypes: Float32Array[]; // one unit row per class
  imageIds: string[];
  labels: number[]; // class index per image
  features: Float32Array[]; // one unit row per image
}

const MAGIC = Buffer.from('SASE', 'ascii');
const VERSION = 1;
const NORM_TOLERANCE = 1e-4;

export function validatePool(pool: Pool): void {
  if (pool.dim < 2) throw new Error(`dim must be >= 2, got ${pool.dim}`);
  if (pool.classNames.length < 2)
    throw new Error(`need at least 2 classes, got ${pool.classNames.length}`);
  if (pool.prototypes.length !== pool.classNames.length)
    throw new Error('one prototype row per class required');
  if (pool.imageIds.length !== pool.features.length || pool.imageIds.length !== pool.labels.length)
    throw new Error('image ids, labels and features must have equal length');
  if (pool.imageIds.length === 0) throw new Error('pool has no images');

  const seen = new Set<string>();
  for (const id of pool.imageIds) {
    if (seen.has(id)) throw new Error(`duplicate image_id ${id}`);
    seen.add(id);
  }
  const counts = new Array(pool.classNames.length).fill(0);
  pool.labels.forEach((label, i) => {
    if (label < 0 || label >= pool.classNames.length)
      throw new Error(`label ${label} at image ${i} outside [0, ${pool.classNames.length})`);
    counts[label] += 1;
  });
  counts.forEach((count, c) => {
    if (count === 0) throw new Error(`class ${c} (${pool.classNames[c]}) has no images`);
  });
  checkUnitRows(pool.prototypes, pool.dim, 'prototype');
  checkUnitRows(pool.features, pool.dim, 'feature');
}

function checkUnitRows(rows: Float32Array[], dim: number, kind: string): void {
  rows.forEach((row, i) => {
    if (row.length !== dim) throw new Error(`${kind} row ${i} has length ${row.length}, expected ${dim}`);
    let sum = 0;
    for (const x of row) sum += x * x;
    const norm = Math.sqrt(sum);
    if (Math.abs(norm - 1) > NORM_TOLERANCE)
      throw new Error(`${kind} row ${i} not unit norm (|v| = ${norm.toFixed(6)})`);
  });
}

function lengthPrefixed(text: string): Buffer {
  const data = Buffer.from(text, 'utf-8');
  const out = Buffer.alloc(4 + data.length);
  out.writeUInt32LE(data.length, 0);
  data.copy(out, 4);
  return out;
}

function float32Rows(rows: Float32Array[], dim: number): Buffer {
  const out = Buffer.alloc(rows.length * dim * 4);
  rows.forEach((row, r) => {
    for (let i = 0; i < dim; i++) out.writeFloatLE(row[i], (r * dim + i) * 4);
  });
  return out;
}

export function poolToBytes(pool: Pool): Buffer {
  validatePool(pool);
  const header = Buffer.alloc(4 + 4 + 4 + 8);
  header.writeUInt32LE(VERSION, 0);
  header.writeUInt32LE(pool.dim, 4);
  header.writeUInt32LE(pool.classNames.length, 8);
  header.writeBigUInt64LE(BigInt(pool.imageIds.length), 12);

  const labels = Buffer.alloc(pool.labels.length * 4);
  pool.labels.forEach((label, i) => labels.writeUInt32LE(label, i * 4));

  return Buffer.concat([
    MAGIC,
    header,
    ...pool.classNames.map(lengthPrefixed),
    float32Rows(pool.prototypes, pool.dim),
    ...pool.imageIds.map(lengthPrefixed),
    labels,
    float32Rows(pool.features, pool.dim),
  ]);
}

export function poolFromBytes(data: Buffer): Pool {
  let offset = 0;
  const take = (count: number, what: string): Buffer => {
    if (offset + count > data.length)
      throw new Error(`truncated in ${what}: expected ${count} bytes, got ${data.length - offset}`);
    const out = data.subarray(offset, offset + count);
    offset += count;
    return out;
  };
  const takeString = (what: string): string => {
    const length = take(4, `${what} length`).readUInt32LE(0);
    return take(length, what).toString('utf-8');
  };

  if (!take(4, 'magic').equals(MAGIC)) throw new Error('bad magic');
  const version = take(4, 'version').readUInt32LE(0);
  if (version !== VERSION) throw new Error(`unsupported version ${version}`);
  const dim = take(4, 'dim').readUInt32LE(0);
  const nClasses = take(4, 'nClasses').readUInt32LE(0);
  const nImages = Number(take(8, 'nImages').readBigUInt64LE(0));

  const classNames = Array.from({ length: nClasses }, (_, i) => takeString(`class name ${i}`));
  const readRows = (rows: number, what: string): Float32Array[] => {
    const raw = take(rows * dim * 4, what);
    return Array.from({ length: rows }, (_, r) => {
      const row = new Float32Array(dim);
      for (let i = 0; i < dim; i++) row[i] = raw.readFloatLE((r * dim + i) * 4);
      return row;
    });
  };
  const prototypes = readRows(nClasses, 'prototypes');
  const imageIds = Array.from({ length: nImages }, (_, i) => takeString(`image id ${i}`));
  const labelBytes = take(nImages * 4, 'labels');
  const labels = Array.from({ length: nImages }, (_, i) => labelBytes.readUInt32LE(i * 4));
  const features = readRows(nImages, 'features');
  if (offset !== data.length) throw new Error(`trailing data: ${data.length - offset} extra bytes`);

  const pool: Pool = { dim, classNames, prototypes, imageIds, labels, features };
  validatePool(pool);
  return pool;
}
