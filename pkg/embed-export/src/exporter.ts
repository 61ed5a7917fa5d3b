import { readFile, rename, rm, writeFile } from 'node:fs/promises'
import { distinctSentences } from './corpus.js'
import { loadEncoder } from './encoder.js'

export interface ExportJob {
    corpusPath: string
    model: string
    batchSize: number
    normalize: boolean
    outPath: string
}

export interface ExportSummary {
    model: string
    dim: number
    count: number
}

function l2normalize(vec: number[]): number[] {
    const norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0))
    return norm === 0 ? vec : vec.map((x) => x / norm)
}

/**
 * Encode every distinct sentence of the corpus and write the embedding
 * exchange JSONL: one provenance header line {model, dim, normalized},
 * then one {id, vec} line per sentence, sorted by id.
 *
 * The file is written to a temp path and renamed, so a failed run never
 * leaves a partial file behind.
 */
export async function exportEmbeddings(job: ExportJob): Promise<ExportSummary> {
    if (job.batchSize < 1) {
        throw new Error('batch size must be >= 1')
    }
    const jsonl = await readFile(job.corpusPath, 'utf8')
    const sentences = distinctSentences(jsonl)
    const encoder = await loadEncoder(job.model)

    const lines: string[] = [
        JSON.stringify({ model: encoder.model, dim: encoder.dim, normalized: job.normalize }),
    ]
    for (let start = 0; start < sentences.length; start += job.batchSize) {
        const batch = sentences.slice(start, start + job.batchSize)
        const vectors = await encoder.encode(batch.map((s) => s.text))
        batch.forEach((sentence, i) => {
            const vec = job.normalize ? l2normalize(vectors[i]) : vectors[i]
            lines.push(JSON.stringify({ id: sentence.id, vec }))
        })
    }

    const tmpPath = `${job.outPath}.tmp-${process.pid}`
    try {
        await writeFile(tmpPath, lines.join('\n') + '\n', 'utf8')
        await rename(tmpPath, job.outPath)
    } catch (err) {
        await rm(tmpPath, { force: true })
        throw err
    }
    return { model: encoder.model, dim: encoder.dim, count: sentences.length }
}
