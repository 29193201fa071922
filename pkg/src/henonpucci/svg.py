"""Static SVG phase portraits written by hand (no plotting library)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .phase import Classification, Geometry, PhaseTrajectory, StationaryPoint

COLORS = {
    Classification.SADDLE: "#d62728",
    Classification.SOURCE: "#ff7f0e",
    Classification.SINK: "#1f77b4",
    Classification.CENTER: "#2ca02c",
    Classification.DEGENERATE: "#7f7f7f",
}


def _f(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Canvas:
    """Maps the data window ``xlim x zlim`` to a ``width x height`` pixel frame."""

    xlim: tuple
    zlim: tuple
    width: int = 640
    height: int = 480
    margin: int = 48
    items: list = field(default_factory=list)

    def px(self, x: float, z: float):
        (x0, x1), (z0, z1) = self.xlim, self.zlim
        w = self.width - 2 * self.margin
        h = self.height - 2 * self.margin
        return (self.margin + (x - x0) / (x1 - x0) * w,
                self.height - self.margin - (z - z0) / (z1 - z0) * h)

    def inside(self, x: float, z: float) -> bool:
        return self.xlim[0] <= x <= self.xlim[1] and self.zlim[0] <= z <= self.zlim[1]

    def polyline(self, xs, zs, stroke="#000", width=1.0, dash: Optional[str] = None, title=None):
        """Clipped to the window; each visible run becomes one ``<polyline>``."""
        run = []
        runs = []
        for x, z in zip(xs, zs):
            if math.isfinite(x) and math.isfinite(z) and self.inside(x, z):
                run.append(self.px(x, z))
            elif run:
                runs.append(run)
                run = []
        if run:
            runs.append(run)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        for r in runs:
            if len(r) < 2:
                continue
            pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in r)
            tip = f"<title>{escape(title)}</title>" if title else ""
            self.items.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
                              f'stroke-width="{width}"{extra}>{tip}</polyline>')

    def line(self, x0, z0, x1, z1, **kw):
        self.polyline(np.linspace(x0, x1, 200), np.linspace(z0, z1, 200), **kw)

    def dot(self, x, z, fill="#000", r=4.0, label: Optional[str] = None):
        if not self.inside(x, z):
            return
        a, b = self.px(x, z)
        self.items.append(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="{r}" fill="{fill}"/>')
        if label:
            self.text(a + 6, b - 6, label)

    def text(self, a, b, s, size=12, anchor="start"):
        self.items.append(f'<text x="{_f(a)}" y="{_f(b)}" font-size="{size}" '
                          f'font-family="sans-serif" text-anchor="{anchor}">{escape(s)}</text>')

    def axes(self):
        (x0, x1), (z0, z1) = self.xlim, self.zlim
        if x0 <= 0 <= x1:
            self.line(0, z0, 0, z1, stroke="#444", width=0.8)
        if z0 <= 0 <= z1:
            self.line(x0, 0, x1, 0, stroke="#444", width=0.8)
        for v in np.linspace(x0, x1, 5):
            a, b = self.px(v, z0)
            self.text(a, b + 16, f"{v:.3g}", size=10, anchor="middle")
        for v in np.linspace(z0, z1, 5):
            a, b = self.px(x0, v)
            self.text(a - 6, b + 4, f"{v:.3g}", size=10, anchor="end")
        a, b = self.px(x1, z0)
        self.text(a, b + 32, "x", anchor="end")
        a, b = self.px(x0, z1)
        self.text(a - 30, b, "z")

    def render(self, title: str = "") -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="#fff"/>\n')
        if title:
            head += f'<text x="{self.width / 2:.2f}" y="20" font-size="14" font-family="sans-serif" ' \
                    f'text-anchor="middle">{escape(title)}</text>\n'
        return head + "\n".join(self.items) + "\n</svg>\n"


def portrait_window(geo: Geometry, points: Sequence[StationaryPoint]):
    """Window covering the a-priori box, the stationary points and part of 2Q."""
    xm, zm = geo.box
    xs = [p.location[0] for p in points] + [xm, geo.pi2_x]
    zs = [p.location[1] for p in points] + [zm]
    xhi = 1.25 * max(xs)
    zhi = 1.25 * max(zs)
    return (-0.5 * xhi, xhi), (0.0, zhi)


def render_portrait(geo: Geometry, points: Sequence[StationaryPoint],
                    curves: Sequence[tuple] = (), title: str = "") -> str:
    """Portrait with the concavity line, both nullclines, the tangency point,
    the a-priori box, labelled stationary points and ``curves``.

    ``curves`` holds ``(label, PhaseTrajectory, color, width)`` entries.
    """
    xlim, zlim = portrait_window(geo, points)
    c = Canvas(xlim, zlim)
    c.axes()
    xm, zm = geo.box
    c.polyline([0, xm, xm, 0, 0], [0, 0, zm, zm, 0], stroke="#999", dash="4,3", title="a-priori box")
    c.line(0, 0, xlim[1], geo.ell_slope * xlim[1], stroke="#8c564b", width=1.2, title="concavity line")
    xx = np.linspace(0, xlim[1], 400)
    c.polyline(xx, geo.parabola_z(xx), stroke="#9467bd", width=1.2, title="x nullcline")
    c.line(geo.pi2_x, zlim[0], geo.pi2_x, zlim[1], stroke="#17becf", width=1.2, dash="6,3",
           title="z nullcline")
    c.dot(*geo.tangency_point, fill="#8c564b", r=3, label="P")
    for label, traj, color, width in curves:
        c.polyline(traj.x, traj.z, stroke=color, width=width, title=label)
    for sp in points:
        c.dot(sp.location[0], sp.location[1], fill=COLORS[sp.classification], r=5,
              label=f"{sp.name} {sp.classification.value}")
    return c.render(title)


def curve(label: str, traj: PhaseTrajectory, color: str = "#333", width: float = 0.8):
    return (label, traj, color, width)
