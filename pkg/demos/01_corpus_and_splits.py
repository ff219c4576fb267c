"""Walk through corpus loading and deterministic splitting.

Run from the repository root:

    python demos/01_corpus_and_splits.py
"""

from wastesort import class_counts, load_corpus, split_corpus

from _common import OUTPUT_DIR, make_corpus


def describe(name, split):
    ids = [img.id for img in split[:3]]
    print(f"  {name:<10} {len(split):>3} images, first ids: {ids}")


def main():
    corpus_dir = make_corpus(OUTPUT_DIR / "corpus", per_class=10)
    corpus = load_corpus(corpus_dir)
    print(f"Loaded {len(corpus)} images from {corpus_dir}")
    print(f"Per-class counts: {class_counts(corpus)}")

    ratios = (0.6, 0.2, 0.2)
    print(f"\nSplitting with ratios (train, test, validation) = {ratios}, seed 3:")
    splits = split_corpus(corpus, ratios, seed=3)
    describe("train", splits.train)
    describe("test", splits.test)
    describe("validation", splits.validation)

    again = split_corpus(corpus, ratios, seed=3)
    same = [img.id for img in splits.test] == [img.id for img in again.test]
    print(f"\nSame seed reproduces the same membership: {same}")

    other = split_corpus(corpus, ratios, seed=4)
    moved = sum(
        1 for a, b in zip(splits.test, other.test) if a.id != b.id
    )
    print(f"A different seed shuffles membership: {moved} of {len(other.test)} "
          "test slots hold a different image")

    stratified = split_corpus(corpus, ratios, seed=3, stratify=True)
    print(f"\nStratified test-split class counts: {class_counts(stratified.test)}")


if __name__ == "__main__":
    main()
