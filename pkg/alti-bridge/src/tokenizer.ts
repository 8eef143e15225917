/**
 * Closed-vocabulary whitespace tokenizer with character offsets.
 *
 * The bridge owns tokenization alignment: character-range spans from the
 * instances file are mapped onto these offsets, so the consumer of emitted
 * records never needs this tokenizer.
 */

export interface TokenSpan {
  start: number;
  end: number;
}

export class WordTokenizer {
  readonly words: string[];
  private ids = new Map<string, number>();

  constructor(words: string[]) {
    this.words = [...words];
    this.words.forEach((w, i) => {
      if (this.ids.has(w)) throw new Error(`duplicate word in vocabulary: ${w}`);
      this.ids.set(w, i);
    });
  }

  get vocabSize(): number {
    return this.words.length;
  }

  idOf(word: string): number {
    const id = this.ids.get(word);
    if (id === undefined) throw new Error(`word not in vocabulary: ${word}`);
    return id;
  }

  encode(text: string): number[] {
    return this.encodeWithOffsets(text).ids;
  }

  encodeWithOffsets(text: string): { ids: number[]; offsets: TokenSpan[] } {
    const ids: number[] = [];
    const offsets: TokenSpan[] = [];
    const re = /\S+/g;
    let match: RegExpExecArray | null;
    while ((match = re.exec(text)) !== null) {
      ids.push(this.idOf(match[0]));
      offsets.push({ start: match.index, end: match.index + match[0].length });
    }
    return { ids, offsets };
  }

  decode(ids: number[]): string {
    return ids.map((i) => this.words[i]).join(" ");
  }
}
