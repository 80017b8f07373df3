#!/usr/bin/env python3
"""Regenerates the synthetic comment corpus used by the end-to-end tests.

Every comment is assembled from keyword families. Given the class, each
family appears independently with a class-specific rate, so programs keyed
on different families are conditionally independent with known, imperfect
accuracies. Output is deterministic for a fixed seed.
"""
import json
import random
import sys
from pathlib import Path

# (phrases, rate in spam, rate in ham)
FAMILIES = {
    "channel": (["subscribe to my channel", "check my channel", "visit my page"], 0.40, 0.03),
    "link": (["http://bit.ly/{}", "https://www.example.com/{}", "http://tinyurl.com/{}"], 0.35, 0.02),
    "click": (["click here", "check out this offer"], 0.30, 0.02),
    "prize": (["free gift cards", "win a phone", "make money from home"], 0.35, 0.04),
    "social": (["follow me on instagram", "like and share"], 0.30, 0.02),
    "praise": (["love this song", "beautiful", "amazing"], 0.10, 0.50),
    "music": (["her voice", "the lyrics", "that guitar solo", "the melody"], 0.08, 0.45),
    "memories": (["brings back memories", "pure nostalgia", "still listening"], 0.02, 0.30),
}
FILLER = ["lol", "wow", "really", "honestly", "omg", "guys", "ok", "yeah", "nice", "cool", "2015"]
SHOUT = {True: 0.30, False: 0.04}


def make(rng, spam):
    parts = []
    for phrases, p_spam, p_ham in FAMILIES.values():
        if rng.random() < (p_spam if spam else p_ham):
            phrase = rng.choice(phrases)
            if "{}" in phrase:
                phrase = phrase.format("".join(rng.choice("abcxyz0123") for _ in range(6)))
            parts.append(phrase)
    parts += rng.sample(FILLER, rng.choice([1, 1, 2]))
    rng.shuffle(parts)
    text = " ".join(parts)
    if rng.random() < SHOUT[spam]:
        text = text.upper()
    elif rng.random() < 0.5:
        text = text[0].upper() + text[1:]
    return text + rng.choice(["", "!", "!!", ".", " :)"])


def write(path, rng, n, prefix):
    with open(path, "w", encoding="utf-8") as out:
        for i in range(n):
            spam = rng.random() < 0.5
            row = {"id": f"{prefix}{i:05d}", "text": make(rng, spam), "gold": 0 if spam else 1}
            out.write(json.dumps(row) + "\n")


def main():
    here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    rng = random.Random(20240611)
    write(here / "corpus.jsonl", rng, 2000, "c")
    write(here / "validation.jsonl", rng, 500, "v")


if __name__ == "__main__":
    main()
