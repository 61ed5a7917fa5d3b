import { mkdtemp, readFile, readdir, writeFile } from 'node:fs/promises'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { beforeAll, describe, expect, it } from 'vitest'

import { CorpusFormatError, distinctSentences, textId } from '../src/corpus.js'
import { loadEncoder, tokenize } from '../src/encoder.js'
import { exportEmbeddings } from '../src/exporter.js'

const CORPUS_LINES = [
    { context_id: 'c1', text: 'search for nike running shoes', count: 3 },
    { context_id: 'c1', text: 'look for running shoes' },
    { context_id: 'c2', text: 'buy a blue laptop' },
    { context_id: 'c2', text: 'search for nike running shoes' }, // duplicate text
    { context_id: '__distractors__', text: 'how much is the camera' },
]

function corpusJsonl(): string {
    return CORPUS_LINES.map((l) => JSON.stringify(l)).join('\n') + '\n'
}

let dir: string
beforeAll(async () => {
    dir = await mkdtemp(join(tmpdir(), 'embed-export-'))
})

describe('textId', () => {
    it('is the first 16 hex chars of sha256', () => {
        // sha256("abc") = ba7816bf8f01cfea...
        expect(textId('abc')).toBe('ba7816bf8f01cfea')
    })
})

describe('distinctSentences', () => {
    it('deduplicates by text across contexts and counts', () => {
        const sentences = distinctSentences(corpusJsonl())
        expect(sentences).toHaveLength(4)
        const ids = sentences.map((s) => s.id)
        expect([...ids].sort()).toEqual(ids)
    })

    it('rejects malformed lines with the line number', () => {
        expect(() => distinctSentences('{"context_id":"c","text":"ok"}\n{oops\n')).toThrowError(
            CorpusFormatError,
        )
        expect(() => distinctSentences('{"context_id":"c"}\n')).toThrowError(/line 1/)
        expect(() =>
            distinctSentences('{"context_id":"c","text":"ok","count":0}\n'),
        ).toThrowError(/count/)
    })
})

describe('tokenize', () => {
    it('lowercases and isolates punctuation', () => {
        expect(tokenize('Search for 64 GB?')).toEqual(['search', 'for', '64', 'gb', '?'])
    })
})

describe('loadEncoder', () => {
    it('provides the built-in hash encoder', async () => {
        const enc = await loadEncoder('hash-64')
        expect(enc.dim).toBe(64)
        const [a, b] = await enc.encode(['buy shoes', 'buy shoes'])
        expect(a).toEqual(b)
    })

    it('word order changes the vector', async () => {
        const enc = await loadEncoder('hash-128')
        const [a, b] = await enc.encode(['buy nike shoes', 'shoes nike buy'])
        expect(a).not.toEqual(b)
    })

    it('gives a clear diagnostic for unloadable models', async () => {
        await expect(loadEncoder('all-MiniLM-L6-v2')).rejects.toThrowError(/cannot load model/)
    })
})

describe('exportEmbeddings', () => {
    it('covers every distinct sentence id with one dimension', async () => {
        const corpusPath = join(dir, 'corpus.jsonl')
        await writeFile(corpusPath, corpusJsonl())
        const outPath = join(dir, 'emb.jsonl')
        const summary = await exportEmbeddings({
            corpusPath,
            model: 'hash-64',
            batchSize: 2,
            normalize: true,
            outPath,
        })
        expect(summary.count).toBe(4)

        const lines = (await readFile(outPath, 'utf8')).trim().split('\n')
        const header = JSON.parse(lines[0])
        expect(header).toEqual({ model: 'hash-64', dim: 64, normalized: true })

        const entries = lines.slice(1).map((l) => JSON.parse(l))
        const ids = new Set(entries.map((e) => e.id))
        for (const sentence of distinctSentences(corpusJsonl())) {
            expect(ids.has(sentence.id)).toBe(true)
        }
        for (const entry of entries) {
            expect(entry.vec).toHaveLength(64)
            const norm = Math.sqrt(entry.vec.reduce((a: number, x: number) => a + x * x, 0))
            expect(Math.abs(norm - 1)).toBeLessThan(1e-5)
        }
    })

    it('re-runs are byte-identical', async () => {
        const corpusPath = join(dir, 'corpus2.jsonl')
        await writeFile(corpusPath, corpusJsonl())
        const outA = join(dir, 'a.jsonl')
        const outB = join(dir, 'b.jsonl')
        for (const outPath of [outA, outB]) {
            await exportEmbeddings({ corpusPath, model: 'hash-32', batchSize: 3, normalize: false, outPath })
        }
        expect(await readFile(outA, 'utf8')).toBe(await readFile(outB, 'utf8'))
    })

    it('never leaves a partial file behind on failure', async () => {
        const corpusPath = join(dir, 'corpus3.jsonl')
        await writeFile(corpusPath, corpusJsonl())
        const outPath = join(dir, 'never-written.jsonl')
        await expect(
            exportEmbeddings({ corpusPath, model: 'no-such-model', batchSize: 8, normalize: false, outPath }),
        ).rejects.toThrowError(/cannot load model/)
        const files = await readdir(dir)
        expect(files).not.toContain('never-written.jsonl')
        expect(files.filter((f) => f.startsWith('never-written'))).toHaveLength(0)
    })

    it('validates the batch size', async () => {
        const corpusPath = join(dir, 'corpus4.jsonl')
        await writeFile(corpusPath, corpusJsonl())
        await expect(
            exportEmbeddings({ corpusPath, model: 'hash-16', batchSize: 0, normalize: false, outPath: join(dir, 'x.jsonl') }),
        ).rejects.toThrowError(/batch size/)
    })
})
