"""CSV tables and SVG scatter plots for solver results."""
import csv
import io

import numpy as np

HEADER = ("idx", "lambda_re", "lambda_im", "mu_re", "mu_im", "eta_re", "eta_im",
          "residual", "j1", "j2", "j3", "omega")


class SchemaError(ValueError):
    pass


def _num(v):
    # shortest round-trip repr; folds -0.0 into 0.0 so output is sign-stable
    return repr(float(v) + 0.0)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        lam, mu, eta = (complex(v) for v in r.value)
        j = r.indices if r.indices is not None else ("", "", "")
        w.writerow([r.idx, _num(lam.real), _num(lam.imag), _num(mu.real), _num(mu.imag),
                    _num(eta.real), _num(eta.imag),
                    "" if r.residual is None else _num(r.residual), *j,
                    "" if r.omega is None else _num(r.omega)])
    return buf.getvalue()


def values_to_csv(values):
    """Oracle table: eigenvalues only, other columns empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for k, v in enumerate(np.asarray(values, dtype=complex)):
        w.writerow([k, *(_num(f(x)) for x in v for f in (np.real, np.imag)),
                    "", "", "", "", ""])
    return buf.getvalue()


def read_values(path):
    """``(N, 3)`` complex eigenvalues from a result or oracle CSV."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd, None)
        if head is None or tuple(head) != HEADER:
            raise SchemaError(f"{path}: header does not match the result schema")
        out = []
        for line, row in enumerate(rd, start=2):
            if len(row) != len(HEADER):
                raise SchemaError(f"{path}:{line}: expected {len(HEADER)} fields")
            try:
                f = [float(x) for x in row[1:7]]
            except ValueError as exc:
                raise SchemaError(f"{path}:{line}: {exc}") from exc
            out.append([complex(f[0], f[1]), complex(f[2], f[3]), complex(f[4], f[5])])
    return np.array(out, dtype=complex).reshape(-1, 3)


def match_nearest(result, oracle):
    """Match each result row to its nearest unused oracle row (max-norm).

    Rows are processed from the best-matching one outward. Returns a list of
    ``(result_idx, oracle_idx or None, distance)`` in result order.
    """
    if len(result) == 0:
        return []
    if len(oracle) == 0:
        return [(i, None, np.inf) for i in range(len(result))]
    dist = np.max(np.abs(result[:, None, :] - oracle[None, :, :]), axis=2)
    order = np.argsort(dist.min(axis=1), kind="stable")
    used = np.zeros(len(oracle), dtype=bool)
    out = {}
    for i in order:
        d = np.where(used, np.inf, dist[i])
        j = int(np.argmin(d))
        if np.isinf(d[j]):
            out[i] = (int(i), None, np.inf)
            continue
        used[j] = True
        out[i] = (int(i), j, float(d[j]))
    return [out[i] for i in range(len(result))]


# -- SVG --------------------------------------------------------------------

def _panel(points, x0, y0, w, h, title, xlabel, ylabel):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    parts = [f'<g transform="translate({x0},{y0})">',
             f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="#444"/>',
             f'<text x="{w / 2}" y="-8" text-anchor="middle" font-size="13">{title}</text>',
             f'<text x="{w / 2}" y="{h + 32}" text-anchor="middle" font-size="11">{xlabel}</text>',
             f'<text x="-34" y="{h / 2}" text-anchor="middle" font-size="11" '
             f'transform="rotate(-90 -34 {h / 2})">{ylabel}</text>']
    if len(pts):
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        lo = lo - 0.05 * span
        span = span * 1.1
        for k, (ax, lab) in enumerate(((0, "x"), (1, "y"))):
            for t in np.linspace(lo[ax], lo[ax] + span[ax], 5):
                if lab == "x":
                    px = (t - lo[0]) / span[0] * w
                    parts.append(f'<text x="{px:.1f}" y="{h + 14}" text-anchor="middle" '
                                 f'font-size="9">{t:.3g}</text>')
                else:
                    py = h - (t - lo[1]) / span[1] * h
                    parts.append(f'<text x="-4" y="{py + 3:.1f}" text-anchor="end" '
                                 f'font-size="9">{t:.3g}</text>')
        for x, y in pts:
            px = (x - lo[0]) / span[0] * w
            py = h - (y - lo[1]) / span[1] * h
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" fill="#1f5fa8"/>')
    parts.append("</g>")
    return "\n".join(parts)


def rows_to_svg(rows, eta_target=0.0):
    """Two scatters: ``|eta - eta_tar|`` by retrieval order, and ``(lambda, eta)``."""
    vals = np.array([[complex(v) for v in r.value] for r in rows]).reshape(-1, 3)
    order = np.arange(len(vals)) + 1
    dist = np.abs(vals[:, 2] - eta_target)
    w, h = 320, 240
    body = [
        _panel(np.column_stack([order, dist]), 60, 40, w, h,
               "distance to target", "order of retrieval", "|eta - eta_tar|"),
        _panel(np.column_stack([vals[:, 0].real, vals[:, 2].real]), 60 + w + 80, 40, w, h,
               "projection onto mu = 0", "lambda", "eta"),
    ]
    width = 2 * w + 160
    height = h + 100
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n")
