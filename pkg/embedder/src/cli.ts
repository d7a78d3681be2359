#!/usr/bin/env node
// sas-embed: encode an image folder into a SASE embedding pool.

import { readFile } from 'fs/promises';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { embedDataset } from './embed.js';
import { createEncoder } from './encoders.js';

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .usage('sas-embed --root <dir> --classes <names.txt> --model <name> --out <pool.sase>')
    .option('root', { type: 'string', demandOption: true, describe: 'image root with one subdirectory per class' })
    .option('classes', { type: 'string', demandOption: true, describe: 'text file with one class name per line, in class order' })
    .option('model', { type: 'string', default: 'clip-vit-b-32', describe: 'encoder: clip-vit-b-32, ref-64, or a CLIP model path' })
    .option('out', { type: 'string', demandOption: true, describe: 'output .sase path' })
    .option('batch', { type: 'number', default: 16, describe: 'encoding batch size' })
    .strict()
    .parse();

  const classNames = (await readFile(argv.classes, 'utf-8'))
    .split('\n')
    .map((line) => line.trim())
    .filter((line) => line.length > 0);

  const result = await embedDataset({
    imageRoot: argv.root,
    classNames,
    encoder: createEncoder(argv.model),
    output: argv.out,
    batchSize: argv.batch,
  });

  for (const id of result.skipped) {
    console.error(`warning: skipped unreadable image ${id}`);
  }
  console.log(
    `wrote ${argv.out}: dim=${result.dim} classes=${classNames.length} ` +
      `images=${result.nImages} skipped=${result.nSkipped}`,
  );
  return 0;
}

main()
  .then((code) => process.exit(code))
  .catch((error) => {
    console.error(`error: ${error.message}`);
    process.exit(1);
  });
