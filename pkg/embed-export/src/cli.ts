#!/usr/bin/env node
import { parseArgs } from 'node:util'
import { exportEmbeddings } from './exporter.js'

const USAGE = `usage: embed-export --corpus <corpus.jsonl> --out <embeddings.jsonl>
                    [--model hash-256] [--batch-size 64] [--normalize]

Encodes every distinct sentence of a corpus JSONL and writes the embedding
exchange file. Built-in model identifiers: hash-<dim>.`

async function run(): Promise<number> {
    const { values } = parseArgs({
        options: {
            corpus: { type: 'string' },
            model: { type: 'string', default: 'hash-256' },
            'batch-size': { type: 'string', default: '64' },
            normalize: { type: 'boolean', default: false },
            out: { type: 'string' },
            help: { type: 'boolean', default: false },
        },
    })
    if (values.help) {
        console.log(USAGE)
        return 0
    }
    if (!values.corpus || !values.out) {
        console.error(USAGE)
        return 1
    }
    const batchSize = parseInt(values['batch-size'] as string, 10)
    if (!Number.isInteger(batchSize) || batchSize < 1) {
        console.error(`error: invalid --batch-size ${values['batch-size']}`)
        return 1
    }
    const summary = await exportEmbeddings({
        corpusPath: values.corpus as string,
        model: values.model as string,
        batchSize,
        normalize: values.normalize as boolean,
        outPath: values.out as string,
    })
    console.error(
        `wrote ${summary.count} embeddings (model ${summary.model}, dim ${summary.dim}) to ${values.out}`,
    )
    return 0
}

run()
    .then((code) => {
        process.exitCode = code
    })
    .catch((err: Error) => {
        console.error(`error: ${err.message}`)
        process.exitCode = 1
    })
