"""Report figures written next to the CSV/JSON outputs of ``depthcues analyze``."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 150,
}


def _figure(width=5.0, height=3.2, ncols=1):
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, ncols, figsize=(width, height), squeeze=False)
    return fig, axes[0]


def _save(fig, path):
    # no timestamp metadata, so reruns produce identical files
    with plt.rc_context(RC):
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_depth_saturation(profile, path):
    fig, (ax,) = _figure()
    edges = profile.bin_edges
    centres = 0.5 * (edges[:-1] + edges[1:])
    means = np.nan_to_num(profile.means)
    ax.bar(centres, means, width=np.diff(edges) * 0.9, color="#4c72b0")
    ax.set_xticks(edges)
    ax.set_xticklabels([f"{e:.0f}" for e in edges])
    ax.set_xlabel("depth (0-255)")
    ax.set_ylabel("mean saturation")
    ax.set_ylim(0, max(1e-6, means.max()) * 1.15)
    _save(fig, path)


def plot_row_saturation(profile, path):
    fig, (ax,) = _figure(height=3.6)
    n = len(profile.means)
    ax.barh(np.arange(n), np.nan_to_num(profile.means), color="#55a868")
    ax.set_yticks(np.arange(n))
    ax.set_yticklabels([f"row {k + 1}" for k in range(n)])
    ax.invert_yaxis()
    ax.set_xlabel("mean saturation")
    _save(fig, path)


def plot_heatmap(table, path):
    fig, axes = _figure(width=10.0, height=3.4, ncols=3)
    for c, (ax, name, cmap) in enumerate(zip(axes, "RGB", ("Reds", "Greens", "Blues"))):
        counts = table.counts[:, :, c].astype(np.float64)
        im = ax.imshow(np.log1p(counts), origin="lower", aspect="auto", cmap=cmap,
                       extent=(table.value_edges[0], table.value_edges[-1], table.depth_edges[0], table.depth_edges[-1]))
        ax.set_title(f"{name} channel")
        ax.set_xlabel("channel value")
        if c == 0:
            ax.set_ylabel("depth (0-255)")
        fig.colorbar(im, ax=ax, label="log(1 + count)")
    _save(fig, path)


def plot_noise(original, result, path):
    fig, axes = _figure(width=10.0, height=2.8, ncols=4)
    panels = [
        (original.data, "original"),
        (result.scrambled.data, "scrambled"),
        (result.noisy.data, f"noisy ({result.meta.get('region', '').lower()})"),
        (result.restored.data, f"restored, rmse {result.rmse:.2f}"),
    ]
    for ax, (img, title) in zip(axes, panels):
        ax.imshow(img)
        ax.set_title(title)
        ax.axis("off")
    _save(fig, path)
