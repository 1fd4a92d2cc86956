"""Tour of the metrics layer: confusion counts, the six report metrics,
ROC/AUC, and the report table round trip.

Run:  python3 demos/metrics_tour.py
"""
import numpy as np

from gazescreen.metrics import (
    auc_score,
    compute_metrics,
    confusion_matrix,
    parse_report_csv,
    render_report_csv,
    render_report_text,
    roc_auc_trapezoid,
    roc_curve,
)


def main():
    rng = np.random.default_rng(11)
    y = rng.integers(0, 2, 400)
    # imperfect scores: the positive class sits one unit higher on average
    scores = rng.normal(0.0, 1.0, 400) + y
    pred = (scores > 0.5).astype(int)

    cm = confusion_matrix(y, pred)
    print(f"confusion matrix: tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn}")
    ms = compute_metrics(cm, y_true=y, scores=scores)
    for name, value in ms.by_name().items():
        print(f"  {name:<12s} {value:7.4f}")

    fpr, tpr, thresholds = roc_curve(y, scores)
    print(f"\nROC curve: {len(thresholds)} thresholds, "
          f"area by trapezoid {roc_auc_trapezoid(fpr, tpr):.6f}, "
          f"rank AUC {auc_score(y, scores):.6f}")

    # the report table serialises to CSV and back without losing the
    # displayed precision
    per_model = {"Strong model": ms,
                 "Coin flip": compute_metrics(
                     confusion_matrix(y, rng.integers(0, 2, 400)))}
    table = render_report_text(per_model, "Demo comparison")
    print("\n" + table)
    parsed = parse_report_csv(render_report_csv(per_model))
    print(f"parsed back models: {sorted(parsed)}")


if __name__ == "__main__":
    main()
