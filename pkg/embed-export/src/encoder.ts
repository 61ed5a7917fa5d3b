import { createHash } from 'node:crypto'

/**
 * A sentence encoder behind a stable model identifier. Encoding must be
 * deterministic for a given identifier so re-exports are byte-identical.
 */
export interface SentenceEncoder {
    model: string
    dim: number
    encode(texts: string[]): Promise<number[][]>
}

const TOKEN_RE = /[\p{L}\p{N}_]+|[^\p{L}\p{N}_\s]/gu

export function tokenize(raw: string): string[] {
    return raw.normalize('NFKC').toLowerCase().match(TOKEN_RE) ?? []
}

/**
 * Dependency-free feature-hashing encoder: every token and token bigram
 * hashes to a signed coordinate. Texts sharing wording land close in
 * cosine space; any change of wording or word order moves the vector.
 */
function hashEncoder(dim: number): SentenceEncoder {
    const coordinate = (feature: string): [number, number] => {
        const digest = createHash('sha256').update(feature, 'utf8').digest()
        const bucket = digest.readUInt32BE(0) % dim
        const sign = digest[4] & 1 ? 1 : -1
        return [bucket, sign]
    }
    return {
        model: `hash-${dim}`,
        dim,
        async encode(texts: string[]): Promise<number[][]> {
            return texts.map((text) => {
                const tokens = tokenize(text)
                const features = [...tokens]
                for (let i = 0; i + 1 < tokens.length; i++) {
                    features.push(`${tokens[i]}~${tokens[i + 1]}`)
                }
                const vec = new Array<number>(dim).fill(0)
                for (const feature of features) {
                    const [bucket, sign] = coordinate(feature)
                    vec[bucket] += sign
                }
                if (!vec.some((x) => x !== 0)) {
                    vec[coordinate(`:fallback:${text}`)[0]] = 1
                }
                return vec
            })
        },
    }
}

const HASH_MODEL = /^hash-(\d+)$/

/**
 * Resolve a model identifier to an encoder.
 *
 * Built-in: "hash-<dim>" (e.g. hash-256). Any other identifier is treated
 * as a transformers.js model name and needs the optional
 * @xenova/transformers dependency plus downloaded weights; failures
 * produce a diagnostic instead of a stack trace.
 */
export async function loadEncoder(model: string): Promise<SentenceEncoder> {
    const hashMatch = HASH_MODEL.exec(model)
    if (hashMatch) {
        const dim = parseInt(hashMatch[1], 10)
        if (dim < 1 || dim > 65536) {
            throw new Error(`hash encoder dimension out of range: ${dim}`)
        }
        return hashEncoder(dim)
    }
    let pipeline: (task: string, model: string) => Promise<unknown>
    try {
        const transformers = await import('@xenova/transformers' as string)
        pipeline = (transformers as { pipeline: typeof pipeline }).pipeline
    } catch {
        throw new Error(
            `cannot load model "${model}": @xenova/transformers is not installed. ` +
                'Install it to use pretrained sentence-embedding checkpoints, or use ' +
                'the built-in "hash-<dim>" encoder (e.g. --model hash-256).',
        )
    }
    try {
        const extractor = (await pipeline('feature-extraction', model)) as (
            texts: string[],
            opts: { pooling: string; normalize: boolean },
        ) => Promise<{ tolist(): number[][] }>
        const probe = await extractor(['probe'], { pooling: 'mean', normalize: false })
        const dim = probe.tolist()[0].length
        return {
            model,
            dim,
            async encode(texts: string[]): Promise<number[][]> {
                const out = await extractor(texts, { pooling: 'mean', normalize: false })
                return out.tolist()
            },
        }
    } catch (err) {
        throw new Error(`cannot load model "${model}": ${(err as Error).message}`)
    }
}
