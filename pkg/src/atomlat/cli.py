"""Command-line front end: parse a run configuration, dispatch one
subcommand, and persist every result as '#'-headed comma-separated tables
plus a key=value summary. `ATOMLAT_THREADS` caps the sweep worker pool."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from .collective import collective_energies, self_energy_batch
from .config import ConfigError, RunConfig, load_config
from .core_model import K_A, DriveSpec, make_lattice
from .linear_finite import trl_coefficients
from .linear_infinite import delay_time, dual_array_tr, single_array_tr
from .tables import format_float, output_path, read_table, write_summary, write_table
from .trajectory import GaussianMode, ModeDetector, g2_numeric, momentum_density, steady_state
from .two_photon_analytic import g2_analytic, rho_analytic, t_matrix

__all__ = ["main"]


def _thread_count() -> int:
    env = os.environ.get("ATOMLAT_THREADS", "")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise click.UsageError(f"ATOMLAT_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise click.UsageError("ATOMLAT_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _pool_map(fn, items):
    items = list(items)
    threads = min(_thread_count(), max(len(items), 1))
    if threads == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _config_options(fn):
    fn = click.option("--out", "out_dir", default=None, help="output directory override")(fn)
    fn = click.option(
        "--set", "overrides", multiple=True, metavar="KEY=VALUE", help="config override"
    )(fn)
    fn = click.option("--config", "config_path", required=True, type=click.Path(exists=True))(fn)
    return fn


def _load(config_path: str, overrides, out_dir) -> RunConfig:
    try:
        cfg = load_config(config_path)
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r}: expected KEY=VALUE")
            key, _, value = item.partition("=")
            cfg.set_text(key.strip(), value)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    if out_dir is not None:
        cfg.values["output.dir"] = out_dir
    return cfg


def _meta(cfg: RunConfig, subcommand: str, **extra) -> dict:
    meta = {
        "subcommand": subcommand,
        "config_hash": cfg.config_hash,
        "geometry_hash": cfg.geometry_hash,
    }
    meta.update(extra)
    return meta


def _reference_energies(cfg: RunConfig):
    a = cfg.require_scalar("geometry.a")
    ce = collective_energies((0.0, 0.0), 0.0, a)
    return a, ce.delta, ce.gamma


def _channels(cfg: RunConfig, default: tuple[str, str] | None):
    text = str(cfg["drive.channels"]).replace(",", "").strip().upper()
    if not text:
        return default
    if any(c not in "TR" for c in text) or len(text) not in (1, 2):
        raise ConfigError(f"drive.channels: expected 'T'/'R' flags, got {text!r}")
    if len(text) == 1:
        return (text, text)
    return (text[0], text[1])


def _run(cfg: RunConfig, subcommand: str, body) -> None:
    try:
        body()
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    except click.ClickException:
        raise
    except Exception as exc:  # propagate module errors with context
        raise click.ClickException(f"{subcommand}: {type(exc).__name__}: {exc}") from exc


@click.group()
def main() -> None:
    """Linear and two-photon optics of sub-wavelength atomic lattices."""


@main.command()
@_config_options
def gfun(config_path, overrides, out_dir) -> None:
    """Lattice-summed Green's function along the BZ path G-X-M-G."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a, shift0, width0 = _reference_energies(cfg)
        n = int(cfg["numerics.bz_grid"])
        b = np.pi / a
        corners = np.array([[0.0, 0.0], [b, 0.0], [b, b], [0.0, 0.0]])
        points, dist = [], []
        s = 0.0
        for p0, p1 in zip(corners[:-1], corners[1:]):
            seg = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
            points.append(p0 + seg * (p1 - p0))
            dist.append(s + np.linalg.norm(p1 - p0) * seg[:, 0])
            s += float(np.linalg.norm(p1 - p0))
        points.append(corners[-1:])
        dist.append(np.array([s]))
        pts = np.concatenate(points)
        path = np.concatenate(dist)
        sig = self_energy_batch(pts, a)
        g = -(K_A / (6.0 * np.pi)) * sig  # back to Green's-function units
        rows = np.column_stack([path, pts[:, 0], pts[:, 1], g.real, g.imag])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "gfun.csv")
        write_table(out, ["path", "kx", "ky", "g_re", "g_im"], rows, _meta(cfg, "gfun", a=a))
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "gfun_summary.txt"),
            {"config_hash": cfg.config_hash, "shift_k0": shift0, "width_k0": width0},
        )

    _run(cfg, "gfun", body)


@main.command()
@_config_options
def collective(config_path, overrides, out_dir) -> None:
    """Collective shift and width maps over the Brillouin zone."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a, shift0, width0 = _reference_energies(cfg)
        n = int(cfg["numerics.bz_grid"])
        axis = np.linspace(-np.pi / a, np.pi / a, n)
        kx, ky = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([kx.ravel(), ky.ravel()])
        sig = self_energy_batch(pts, a)
        rows = np.column_stack([pts[:, 0], pts[:, 1], sig.real, -sig.imag])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "collective.csv")
        write_table(out, ["kx", "ky", "shift", "width"], rows, _meta(cfg, "collective", a=a))
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "collective_summary.txt"),
            {"config_hash": cfg.config_hash, "shift_k0": shift0, "width_k0": width0},
        )

    _run(cfg, "collective", body)


@main.command()
@_config_options
def transmission(config_path, overrides, out_dir) -> None:
    """Infinite-array transmission/reflection over the detuning sweep
    (and separation sweep for two layers)."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a, shift0, width0 = _reference_energies(cfg)
        deltas = cfg.require_sweep("drive.delta")
        kp = tuple(cfg["drive.k_perp"])
        evan = bool(cfg["numerics.include_evanescent"])
        layers = int(cfg["geometry.layers"])
        rows = []
        if layers == 2:
            seps = cfg.require_sweep("geometry.L")
            for L in seps:
                for d in deltas:
                    tr = dual_array_tr(kp, float(d), float(L), a, include_evanescent=evan)
                    rows.append(
                        [d, (d - shift0) / width0, L, abs(tr.t) ** 2, abs(tr.r) ** 2]
                    )
            columns = ["delta", "delta_scaled", "L", "T", "R"]
        else:
            for d in deltas:
                tr = single_array_tr(kp, float(d), a)
                rows.append([d, (d - shift0) / width0, abs(tr.t) ** 2, abs(tr.r) ** 2])
            columns = ["delta", "delta_scaled", "T", "R"]
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "transmission.csv")
        write_table(out, columns, rows, _meta(cfg, "transmission", a=a, layers=layers))
        arr = np.asarray(rows)
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "transmission_summary.txt"),
            {
                "config_hash": cfg.config_hash,
                "max_T": float(arr[:, -2].max()),
                "max_R": float(arr[:, -1].max()),
            },
        )

    _run(cfg, "transmission", body)


@main.command()
@_config_options
def delay(config_path, overrides, out_dir) -> None:
    """Group delay of the scattered light over the detuning sweep."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a, shift0, width0 = _reference_energies(cfg)
        deltas = cfg.require_sweep("drive.delta")
        kp = tuple(cfg["drive.k_perp"])
        layers = int(cfg["geometry.layers"])
        evan = bool(cfg["numerics.include_evanescent"])
        system = "dual" if layers == 2 else "single"
        L = cfg.require_scalar("geometry.L") if layers == 2 else None
        taus = _pool_map(
            lambda d: delay_time(system, kp, float(d), a, L, include_evanescent=evan), deltas
        )
        rows = np.column_stack([deltas, (deltas - shift0) / width0, taus])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "delay.csv")
        write_table(out, ["delta", "delta_scaled", "tau"], rows, _meta(cfg, "delay", a=a))
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "delay_summary.txt"),
            {"config_hash": cfg.config_hash, "max_tau": float(np.max(taus))},
        )

    _run(cfg, "delay", body)


def _finite_geometry(cfg: RunConfig, L: float | None = None):
    a = cfg.require_scalar("geometry.a")
    layers = int(cfg["geometry.layers"])
    if layers == 2 and L is None:
        L = cfg.require_scalar("geometry.L")
    curvature = "gaussian" if bool(cfg["geometry.curved"]) else "none"
    w0c = cfg["geometry.w0_curvature"]
    if curvature == "gaussian" and w0c is None:
        w0c = cfg.require_scalar("drive.w0")
    return make_lattice(a, int(cfg["geometry.n_side"]), layers, L, curvature, w0c)


def _drive(cfg: RunConfig, delta: float) -> DriveSpec:
    return DriveSpec(
        delta=float(delta),
        mode="gaussian",
        amplitude=float(cfg["drive.omega0"]),
        k_perp=tuple(cfg["drive.k_perp"]),
        w0=cfg.require_scalar("drive.w0"),
    )


@main.command()
@_config_options
def finite(config_path, overrides, out_dir) -> None:
    """Finite-array transmission, reflection and loss over the detuning sweep."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a, shift0, width0 = _reference_energies(cfg)
        geom = _finite_geometry(cfg)
        deltas = cfg.require_sweep("drive.delta")

        def point(d):
            return trl_coefficients(geom, _drive(cfg, d), float(d))

        trl = np.asarray(_pool_map(point, deltas))
        rows = np.column_stack([deltas, (deltas - shift0) / width0, trl])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "finite.csv")
        write_table(
            out,
            ["delta", "delta_scaled", "T", "R", "loss"],
            rows,
            _meta(cfg, "finite", a=a, n_side=geom.n_side, layers=geom.layers),
        )
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "finite_summary.txt"),
            {
                "config_hash": cfg.config_hash,
                "max_T": float(trl[:, 0].max()),
                "min_loss": float(trl[:, 2].min()),
            },
        )

    _run(cfg, "finite", body)


def _k_slice_grid(cfg: RunConfig):
    n = int(cfg["numerics.k_points"])
    kmax = float(cfg["numerics.k_max"])
    axis = np.linspace(-kmax, kmax, n)
    k1, k2 = np.meshgrid(axis, axis, indexing="ij")
    return k1.ravel(), k2.ravel()


@main.command("rho-num")
@_config_options
def rho_num(config_path, overrides, out_dir) -> None:
    """Two-photon momentum density (truncated-state route) on the
    k1x=k2x=0 slice."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a = cfg.require_scalar("geometry.a")
        delta = cfg.require_scalar("drive.delta")
        geom = _finite_geometry(cfg)
        drive = _drive(cfg, delta)
        channels = _channels(cfg, ("T", "T"))
        t = float(cfg["numerics.correlation_time"])
        k1y, k2y = _k_slice_grid(cfg)
        psi = steady_state(geom, drive, delta)
        psi = psi.scaled(1.0 / psi.norm())

        def point(pair):
            return momentum_density(
                geom, drive, delta, (0.0, pair[0]), (0.0, pair[1]), t,
                channels=channels, psi_ss=psi,
            )

        rho = np.asarray(_pool_map(point, zip(k1y, k2y)))
        rows = np.column_stack([k1y, k2y, rho])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "rho_num.csv")
        write_table(
            out,
            ["k1y", "k2y", "rho"],
            rows,
            _meta(cfg, "rho-num", a=a, delta=delta, channels="".join(channels), t=t),
        )
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "rho_num_summary.txt"),
            {"config_hash": cfg.config_hash, "max_rho": float(rho.max())},
        )

    _run(cfg, "rho-num", body)


@main.command("rho-ana")
@_config_options
def rho_ana(config_path, overrides, out_dir) -> None:
    """Two-photon momentum density (closed-form route) on the same slice."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a = cfg.require_scalar("geometry.a")
        delta = cfg.require_scalar("drive.delta")
        w0 = cfg.require_scalar("drive.w0")
        channels = _channels(cfg, ("T", "T"))
        t = float(cfg["numerics.correlation_time"])
        layers = int(cfg["geometry.layers"])
        L = cfg.require_scalar("geometry.L") if layers == 2 else None
        k1y, k2y = _k_slice_grid(cfg)
        k1 = np.column_stack([np.zeros_like(k1y), k1y])
        k2 = np.column_stack([np.zeros_like(k2y), k2y])
        rho = rho_analytic(
            k1, k2, delta, a, w0, t=t, channels=channels, L=L,
            include_evanescent=bool(cfg["numerics.include_evanescent"]),
            n_base=int(cfg["numerics.bz_grid"]),
        )
        rows = np.column_stack([k1y, k2y, rho])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "rho_ana.csv")
        write_table(
            out,
            ["k1y", "k2y", "rho"],
            rows,
            _meta(cfg, "rho-ana", a=a, delta=delta, channels="".join(channels), t=t),
        )
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "rho_ana_summary.txt"),
            {"config_hash": cfg.config_hash, "max_rho": float(np.max(rho))},
        )

    _run(cfg, "rho-ana", body)


def _t_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(0.0, float(cfg["numerics.t_max"]), int(cfg["numerics.t_points"]))


@main.command("g2-num")
@_config_options
def g2_num(config_path, overrides, out_dir) -> None:
    """Intensity correlation g2(t) from truncated-state evolution."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a = cfg.require_scalar("geometry.a")
        delta = cfg.require_scalar("drive.delta")
        geom = _finite_geometry(cfg)
        drive = _drive(cfg, delta)
        channels = _channels(cfg, None)
        detector = None
        if channels is not None:
            detector = ModeDetector(GaussianMode(drive.w0), channels[0])
        t_grid = _t_grid(cfg)
        g2 = g2_numeric(
            geom, drive, delta, t_grid, detector=detector, dt=float(cfg["numerics.dt"])
        )
        rows = np.column_stack([t_grid, g2])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "g2_num.csv")
        write_table(out, ["t", "g2"], rows, _meta(cfg, "g2-num", a=a, delta=delta))
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "g2_num_summary.txt"),
            {"config_hash": cfg.config_hash, "g2_0": float(g2[0]), "g2_end": float(g2[-1])},
        )

    _run(cfg, "g2-num", body)


@main.command("g2-ana")
@_config_options
def g2_ana(config_path, overrides, out_dir) -> None:
    """Intensity correlation g2(t) from the closed-form route."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a = cfg.require_scalar("geometry.a")
        delta = cfg.require_scalar("drive.delta")
        w0 = cfg.require_scalar("drive.w0")
        layers = int(cfg["geometry.layers"])
        L = cfg.require_scalar("geometry.L") if layers == 2 else None
        t_grid = _t_grid(cfg)
        g2 = g2_analytic(
            delta, a, w0, t_grid, L=L, channels=_channels(cfg, None),
            include_evanescent=bool(cfg["numerics.include_evanescent"]),
            n_base=int(cfg["numerics.bz_grid"]),
        )
        rows = np.column_stack([t_grid, g2])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "g2_ana.csv")
        write_table(out, ["t", "g2"], rows, _meta(cfg, "g2-ana", a=a, delta=delta))
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "g2_ana_summary.txt"),
            {"config_hash": cfg.config_hash, "g2_0": float(g2[0]), "g2_end": float(g2[-1])},
        )

    _run(cfg, "g2-ana", body)


@main.command()
@_config_options
def tmatrix(config_path, overrides, out_dir) -> None:
    """Pair-scattering amplitude over a grid of total transverse momenta."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        a = cfg.require_scalar("geometry.a")
        delta = cfg.require_scalar("drive.delta")
        layers = int(cfg["geometry.layers"])
        L = cfg.require_scalar("geometry.L") if layers == 2 else None
        evan = bool(cfg["numerics.include_evanescent"])
        n = int(cfg["numerics.k_points"])
        axis = np.linspace(-np.pi / a, np.pi / a, n)
        kx, ky = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([kx.ravel(), ky.ravel()])

        def point(row):
            return t_matrix(
                tuple(row), 2.0 * delta, a, L=L, include_evanescent=evan,
                n_base=int(cfg["numerics.bz_grid"]), rtol=float(cfg["numerics.rtol"]),
            )

        results = _pool_map(point, pts)
        if layers == 2:
            columns = ["Kx", "Ky", "t_even_re", "t_even_im", "t_odd_re", "t_odd_im"]
            vals = np.array([[r.values[0], r.values[1]] for r in results])
            rows = np.column_stack(
                [pts, vals[:, 0].real, vals[:, 0].imag, vals[:, 1].real, vals[:, 1].imag]
            )
        else:
            columns = ["Kx", "Ky", "t_re", "t_im"]
            vals = np.array([r.value for r in results])
            rows = np.column_stack([pts, vals.real, vals.imag])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "tmatrix.csv")
        write_table(out, columns, rows, _meta(cfg, "tmatrix", a=a, delta=delta))
        write_summary(
            output_path(cfg["output.dir"], cfg["output.prefix"], "tmatrix_summary.txt"),
            {
                "config_hash": cfg.config_hash,
                "max_doubling_change": float(max(r.doubling_change for r in results)),
            },
        )

    _run(cfg, "tmatrix", body)


@main.command()
@_config_options
def xcheck(config_path, overrides, out_dir) -> None:
    """Compare two result tables (e.g. rho-num vs rho-ana) point by point."""
    cfg = _load(config_path, overrides, out_dir)

    def body() -> None:
        path_a = str(cfg.require("xcheck.file_a"))
        path_b = str(cfg.require("xcheck.file_b"))
        meta_a, cols_a, data_a = read_table(path_a)
        meta_b, cols_b, data_b = read_table(path_b)
        if meta_a.get("geometry_hash") != meta_b.get("geometry_hash"):
            raise click.ClickException(
                "xcheck: geometry hashes differ "
                f"({meta_a.get('geometry_hash')} vs {meta_b.get('geometry_hash')})"
            )
        if cols_a[:-1] != cols_b[:-1] or data_a.shape != data_b.shape:
            raise click.ClickException("xcheck: tables have incompatible axes")
        if data_a.shape[1] > 1 and not np.array_equal(data_a[:, :-1], data_b[:, :-1]):
            raise click.ClickException("xcheck: axis values differ between tables")
        va, vb = data_a[:, -1], data_b[:, -1]
        scale = 1.0
        if bool(cfg["xcheck.scale_fit"]):
            denom = float(vb @ vb)
            if denom == 0.0:
                raise click.ClickException("xcheck: second table is all zeros")
            scale = float(va @ vb) / denom
        diff = np.abs(va - scale * vb)
        ref = max(float(np.max(np.abs(va))), 1e-300)
        max_abs = float(np.max(diff)) if diff.size else 0.0
        max_rel = float(np.max(diff) / ref)
        tol = float(cfg["xcheck.tolerance"])
        out = output_path(cfg["output.dir"], cfg["output.prefix"], "xcheck_summary.txt")
        write_summary(
            out,
            {
                "config_hash": cfg.config_hash,
                "file_a": path_a,
                "file_b": path_b,
                "scale": scale,
                "max_abs_dev": max_abs,
                "max_rel_dev": max_rel,
                "tolerance": tol,
                "pass": "true" if max_rel <= tol else "false",
            },
        )
        click.echo(
            f"xcheck: max_rel_dev={format_float(max_rel)} "
            f"tolerance={format_float(tol)} -> {'pass' if max_rel <= tol else 'FAIL'}"
        )

    _run(cfg, "xcheck", body)


if __name__ == "__main__":
    main()
