import { createHash } from 'node:crypto'

/**
 * One distinct sentence of a corpus, keyed by the same content hash the
 * metric library derives when a corpus line carries no explicit id:
 * sha256 of the raw utf-8 text, first 16 hex chars.
 */
export interface CorpusSentence {
    id: string
    text: string
}

export function textId(raw: string): string {
    return createHash('sha256').update(raw, 'utf8').digest('hex').slice(0, 16)
}

export class CorpusFormatError extends Error {
    constructor(message: string, readonly line: number) {
        super(`line ${line}: ${message}`)
    }
}

interface CorpusRecord {
    context_id?: unknown
    text?: unknown
    count?: unknown
}

/**
 * Parse corpus JSONL and return every distinct sentence, sorted by id.
 * Lines share the schema of the metric library's corpus files; `count`
 * only affects multiplicity, so it is ignored here beyond validation.
 */
export function distinctSentences(jsonl: string): CorpusSentence[] {
    const seen = new Map<string, string>()
    const lines = jsonl.split('\n')
    for (let i = 0; i < lines.length; i++) {
        const line = lines[i].trim()
        if (!line) continue
        let record: CorpusRecord
        try {
            record = JSON.parse(line)
        } catch {
            throw new CorpusFormatError('invalid JSON', i + 1)
        }
        if (typeof record.text !== 'string' || record.text.trim() === '') {
            throw new CorpusFormatError('missing or empty "text" field', i + 1)
        }
        if (typeof record.context_id !== 'string') {
            throw new CorpusFormatError('missing "context_id" field', i + 1)
        }
        if (record.count !== undefined) {
            if (!Number.isInteger(record.count) || (record.count as number) < 1) {
                throw new CorpusFormatError(`count must be an integer >= 1, got ${record.count}`, i + 1)
            }
        }
        const text = record.text
        seen.set(textId(text), text)
    }
    if (seen.size === 0) {
        throw new Error('corpus contains no sentences')
    }
    return [...seen.entries()]
        .map(([id, text]) => ({ id, text }))
        .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0))
}
