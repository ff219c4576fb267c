"""Train the small CNN on the synthetic corpus and print an evaluation.

Run from the repository root:

    python demos/02_train_and_evaluate.py

Takes well under a minute on a CPU. The resulting checkpoint and
portable artifact land in demos/output and are reused by the later
demos.
"""

from wastesort import (
    confusion,
    format_report,
    load_checkpoint,
    load_corpus,
    load_history_csv,
    load_split_manifest,
    predict_images,
    report,
)

from _common import ensure_artifact


def main():
    paths = ensure_artifact(force=True)
    history = load_history_csv(paths["history"])
    print(f"Trained for {len(history.epochs)} epochs:")
    for row in history.epochs:
        print(f"  epoch {row.epoch:>2}  train_loss {row.train_loss:.4f}  "
              f"train_acc {row.train_acc:.3f}  val_acc {row.val_acc:.3f}")

    model = load_checkpoint(paths["checkpoint"])
    corpus = load_corpus(paths["corpus"])
    splits = load_split_manifest(paths["manifest"], corpus)

    probs = predict_images(model, splits.test)
    y_true = [img.label.index for img in splits.test]
    y_pred = probs.argmax(axis=1).tolist()
    rep = report(confusion(y_true, y_pred))

    print(f"\nHeld-out test split ({len(splits.test)} images):")
    print(format_report(rep))


if __name__ == "__main__":
    main()
