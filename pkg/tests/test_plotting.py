from medmine.matcher import MatchCounts
from medmine.metrics import build_report
from medmine.plotting import plot_chunk_sizes, plot_label_distribution, plot_mode_comparison, plot_report


def test_figures_are_written_and_reproducible(tmp_path, med7plus_rows):
    rep = build_report(med7plus_rows)
    counted = build_report({"Drug": MatchCounts(cor=3, mis=1), "ADE": MatchCounts(cor=1, spu=2)}, "strict")
    outputs = [
        lambda d: plot_report(rep, d / "r.png", title="type"),
        lambda d: plot_mode_comparison({"type": rep, "strict": counted}, d / "m.png"),
        lambda d: plot_label_distribution({"Drug": 10, "ADE": 2}, d / "l.png"),
        lambda d: plot_chunk_sizes([512, 512, 276], d / "c.png", 512),
    ]
    for k, fn in enumerate(outputs):
        a, b = tmp_path / f"a{k}", tmp_path / f"b{k}"
        pa, pb = fn(a), fn(b)
        assert pa.read_bytes()[:4] == b"\x89PNG"
        assert pa.read_bytes() == pb.read_bytes()
