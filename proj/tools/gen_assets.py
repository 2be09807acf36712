#!/usr/bin/env python3
"""Regenerates the bundled toy assets under data/.

Everything is derived from a fixed seed, so rerunning produces byte-identical
files. Content words are pronounceable pseudo-words; the function words are
ordinary English.
"""

import argparse
import collections
import os
import random

SEED = 20240611

FUNCTION_WORDS = [
    "the", "and", "with", "may", "can", "from", "for", "are", "that", "this",
    "into", "also", "most", "some", "very", "when", "after", "often", "such",
    "other", "more", "each", "while", "over", "under", "than", "both", "only",
    "then", "will", "its", "their", "your", "any", "all", "many",
    "few", "has", "have", "was", "were", "not", "but", "yet", "near",
]

QUESTION_TEMPLATES = [
    "what are the symptoms of {d} ?",
    "how do doctors treat {d} ?",
    "what causes {d} ?",
    "is there a cure for {d} ?",
    "how do doctors diagnose {d} ?",
    "who is at risk of {d} ?",
    "can you prevent {d} ?",
    "what is the outlook for {d} ?",
    "how long will you have {d} ?",
    "what tests confirm {d} ?",
]

SIMILAR_TEMPLATE = "tell me about the signs of {d} ?"

# Word-level rewrites used for the rephrased prompt file. Each entry maps a
# template to a paraphrase that keeps the trailing "<disease> ?". Every
# template ends that way so a short-context model still sees the disease.
REPHRASE = {
    "what are the symptoms of {d} ?": "which symptoms come with {d} ?",
    "how do doctors treat {d} ?": "what treatment do doctors use for {d} ?",
    "what causes {d} ?": "what is the cause of {d} ?",
    "is there a cure for {d} ?": "can doctors cure {d} ?",
    "how do doctors diagnose {d} ?": "what is the diagnosis for {d} ?",
    "who is at risk of {d} ?": "which people risk getting {d} ?",
    "can you prevent {d} ?": "is it possible to prevent {d} ?",
    "what is the outlook for {d} ?": "what outlook do patients have with {d} ?",
    "how long will you have {d} ?": "for how long does one have {d} ?",
    "what tests confirm {d} ?": "which tests can confirm {d} ?",
}

CONSONANTS = "bcdfghjklmnprstvz"
VOWELS = "aeiou"

N_DISEASES = 50
CONTENT_PER_DISEASE = 120
MIN_BODY_TOKENS = 330
BODY_REPEATS = 3
STORE_SEGMENTS_PER_DOC = 4
VARIANT_RATE = 0.1
G_FAMILIES = 5
G_MAX_P = 7
N_PROBE_LEN = 60


class WordFactory:
    def __init__(self, rng, reserved):
        self.rng = rng
        self.used = set(reserved)

    def word(self, lo=3, hi=7):
        while True:
            n = self.rng.randint(lo, hi)
            s = []
            while len(s) < n:
                s.append(self.rng.choice(CONSONANTS))
                if len(s) < n:
                    s.append(self.rng.choice(VOWELS))
            w = "".join(s)
            if w not in self.used:
                self.used.add(w)
                return w


def zipf_choice(rng, items):
    weights = [1.0 / (r + 1) for r in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def make_body(rng, disease, content):
    """Sentences that never put two function words next to each other, so
    every model state touches a word owned by this document."""
    out = []
    while len(out) < MIN_BODY_TOKENS:
        n_content = rng.randint(3, 6)
        sentence = [rng.choice(content)]
        for _ in range(n_content - 1):
            if rng.random() < 0.7:
                sentence.append(zipf_choice(rng, FUNCTION_WORDS))
            sentence.append(rng.choice(content) if rng.random() < 0.85 else disease)
        out.extend(sentence)
    return out


def vary(rng, tokens):
    """Swap a few function words so the copies of an answer disagree in places;
    sampling then has real choices that rejoin the same text."""
    fw = set(FUNCTION_WORDS)
    return [rng.choice(FUNCTION_WORDS) if t in fw and rng.random() < VARIANT_RATE else t for t in tokens]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    rng = random.Random(SEED)
    template_words = {w for t in QUESTION_TEMPLATES + list(REPHRASE.values()) + [SIMILAR_TEMPLATE]
                      for w in t.split()}
    words = WordFactory(rng, set(FUNCTION_WORDS) | template_words | {"A"})

    diseases = [words.word(5, 7) for _ in range(N_DISEASES)]
    corpus = []
    store = []
    for i, d in enumerate(diseases):
        content = [words.word() for _ in range(CONTENT_PER_DISEASE)]
        body = make_body(rng, d, content)
        own = QUESTION_TEMPLATES[i % len(QUESTION_TEMPLATES)]
        extra = QUESTION_TEMPLATES[(i + 3) % len(QUESTION_TEMPLATES)]
        for q in (own, extra, SIMILAR_TEMPLATE):
            corpus.append(q.format(d=d) + " " + " ".join(vary(rng, body * BODY_REPEATS)))
        seg = len(body) // STORE_SEGMENTS_PER_DOC
        for s in range(STORE_SEGMENTS_PER_DOC):
            store.append(" ".join(body[s * seg:(s + 1) * seg]))

    # Hyperparameter probes. N: one token repeated. G: for each family a key
    # token and, for every P, a block of P seven-token phrases "key t1..t6"
    # with fresh t's, cycled so the model keeps repeating the block.
    corpus.append(" ".join(["A"] * N_PROBE_LEN))
    gprobe = []
    for fam in range(G_FAMILIES):
        key = words.word(4, 6)
        for p in range(1, G_MAX_P + 1):
            phrases = [[key] + [words.word() for _ in range(6)] for _ in range(p)]
            cycle = [t for ph in phrases for t in ph]
            corpus.append(" ".join(cycle * 4))
            for ph in phrases:
                gprobe.append(f"{fam}\t{p}\t{' '.join(ph)}")

    exp1 = [QUESTION_TEMPLATES[i % len(QUESTION_TEMPLATES)].format(d=d) for i, d in enumerate(diseases)]
    exp2 = [SIMILAR_TEMPLATE.format(d=d) for d in diseases]
    rephrased = [REPHRASE[QUESTION_TEMPLATES[i % len(QUESTION_TEMPLATES)]].format(d=d)
                 for i, d in enumerate(diseases)]

    counts = collections.Counter(w for line in corpus for w in line.split())
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def write(name, lines):
        with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line + "\n")

    write("toy_corpus.txt", corpus)
    write("toy_store.txt", store)
    write("prompts_exp1.txt", exp1)
    write("prompts_exp2.txt", exp2)
    write("prompts_rephrased.txt", rephrased)
    write("wordlist.txt", [f"{w}\t{c}" for w, c in ranked])
    write("gprobe_phrases.txt", gprobe)
    print(f"corpus: {len(corpus)} lines, {sum(counts.values())} tokens, {len(counts)} types")


if __name__ == "__main__":
    main()
