"""Walk through the session simulator: target geometry, impairment
effects, and the CSV wire format.

Run:  python3 demos/simulate_sessions.py
"""
import os
import tempfile

import numpy as np

from gazescreen.data import FEATURE_COLUMNS, load_csv, write_csv
from gazescreen.simulate import (
    ImpairmentParams,
    SessionSpec,
    generate_cohort,
    simulate_session,
    target_trajectory,
)


def describe_target(kind):
    spec = SessionSpec(test_kind=kind)
    t = np.arange(spec.n_frames) / spec.sample_rate_hz
    dirs = target_trajectory(spec, t)
    yaw = np.degrees(np.arctan2(dirs[:, 0], dirs[:, 2]))
    pitch = np.degrees(np.arcsin(np.clip(dirs[:, 1], -1, 1)))
    print(f"{kind}: {spec.n_frames} frames over {spec.duration_s:.1f} s "
          f"at {spec.sample_rate_hz:.0f} Hz")
    print(f"  yaw span   {yaw.min():7.2f} .. {yaw.max():7.2f} deg")
    print(f"  pitch span {pitch.min():7.2f} .. {pitch.max():7.2f} deg")


def compare_impairments():
    clean = simulate_session(SessionSpec(
        test_kind="SP", seed=42, impairment=ImpairmentParams.control()))
    impaired = simulate_session(SessionSpec(
        test_kind="SP", seed=42, label=1,
        impairment=ImpairmentParams.concussed()))
    # same seed, so the noise draws line up and the difference is the
    # impairment itself
    left_clean = clean.eye_dirs("left")
    left_imp = impaired.eye_dirs("left")
    gap = np.degrees(np.arccos(np.clip(
        np.sum(left_clean * left_imp, axis=1), -1.0, 1.0)))
    lpupil = list(FEATURE_COLUMNS).index("lpupil")
    print("\nclean vs concussed left eye (same seed):")
    print(f"  mean angular gap {gap.mean():.3f} deg, max {gap.max():.3f} deg")
    print(f"  mean pupil shift {impaired.features[:, lpupil].mean() - clean.features[:, lpupil].mean():+.3f} mm")


def round_trip_csv():
    ds = generate_cohort(2, 1, "SP", base_seed=7)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cohort.csv")
        write_csv(ds, path)
        again = load_csv(path, "SP")
        same = (np.array_equal(ds.features, again.features)
                and np.array_equal(ds.labels, again.labels))
        size_kb = os.path.getsize(path) / 1024
    print(f"\nwrote {len(ds)} frames ({size_kb:.0f} KiB), "
          f"round-trip bit-exact: {same}")


if __name__ == "__main__":
    describe_target("SP")
    describe_target("VMS")
    compare_impairments()
    round_trip_csv()
