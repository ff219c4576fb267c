"""Show that the exported artifact matches the training-framework model.

Run from the repository root:

    python demos/03_portable_inference.py

The portable model needs only numpy and onnxruntime, so this is the
path a deployment without the training stack would take.
"""

import numpy as np

from wastesort import (
    load_checkpoint,
    load_corpus,
    load_portable,
    predict_images,
)

from _common import ensure_artifact


def main():
    paths = ensure_artifact()
    portable = load_portable(paths["artifact"])
    print(f"Loaded {paths['artifact'].name}: backbone {portable.metadata['backbone_id']}, "
          f"input {portable.input_size}, normalization {portable.normalization}")

    corpus = load_corpus(paths["corpus"])
    sample = corpus[::7][:12]

    native = load_checkpoint(paths["checkpoint"])
    p_native = predict_images(native, sample)
    p_portable = predict_images(portable, sample)

    agree = (p_native.argmax(axis=1) == p_portable.argmax(axis=1)).mean()
    drift = np.abs(p_native - p_portable).max()
    print(f"\nCompared {len(sample)} images:")
    print(f"  argmax agreement: {agree:.0%}")
    print(f"  max per-class probability drift: {drift:.2e}")

    top = p_portable[0]
    order = np.argsort(top)[::-1][:3]
    print(f"\nTop-3 for {sample[0].id}:")
    for k in order:
        print(f"  {portable.labels[k]:<10} {top[k]:.4f}")


if __name__ == "__main__":
    main()
