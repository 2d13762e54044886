"""HTTP service exposing bounded single-point evaluations of the library.

Sweeps and heavy grid jobs belong to the CLI; the service answers pointwise
questions (collective energies, plane-wave transmission, group delay,
pair-scattering amplitude, closed-form correlations) with JSON in and out.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .collective import collective_energies, even_odd_energies
from .core_model import K_A
from .linear_infinite import delay_time, dual_array_tr, single_array_tr
from .two_photon_analytic import g2_analytic, t_matrix

app = FastAPI(title="atomlat", version="0.1.0")


class LatticePoint(BaseModel):
    a: float = Field(gt=0.0, le=1.0, description="lattice spacing in wavelengths")
    kx: float = 0.0
    ky: float = 0.0
    L: float | None = Field(default=None, gt=0.0)
    include_evanescent: bool = True


class TransmissionRequest(LatticePoint):
    delta: float


class DelayRequest(TransmissionRequest):
    pass


class TMatrixRequest(BaseModel):
    a: float = Field(gt=0.0, le=1.0)
    delta: float
    Kx: float = 0.0
    Ky: float = 0.0
    L: float | None = Field(default=None, gt=0.0)
    include_evanescent: bool = True
    n_base: int = Field(default=32, ge=8, le=64)


class G2Request(BaseModel):
    a: float = Field(gt=0.0, le=1.0)
    delta: float
    w0: float = Field(ge=1.0, le=16.0)
    t: float = Field(ge=0.0, le=100.0)
    L: float | None = Field(default=None, gt=0.0)
    channels: str | None = None


def _guard(fn):
    try:
        return fn()
    except (ValueError, ZeroDivisionError, RuntimeError) as exc:
        raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}") from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/collective")
def collective(req: LatticePoint) -> dict:
    def body():
        if req.L is None:
            ce = collective_energies((req.kx, req.ky), 0.0, req.a)
            return {"shift": ce.delta, "width": ce.gamma}
        eo = even_odd_energies(
            (req.kx, req.ky), req.L, req.a, K_A, req.include_evanescent
        )
        return {
            "shift_even": eo.delta_even,
            "width_even": eo.gamma_even,
            "shift_odd": eo.delta_odd,
            "width_odd": eo.gamma_odd,
        }

    return _guard(body)


@app.post("/transmission")
def transmission(req: TransmissionRequest) -> dict:
    def body():
        kp = (req.kx, req.ky)
        if req.L is None:
            tr = single_array_tr(kp, req.delta, req.a)
        else:
            tr = dual_array_tr(
                kp, req.delta, req.L, req.a, include_evanescent=req.include_evanescent
            )
        return {
            "t_re": tr.t.real,
            "t_im": tr.t.imag,
            "r_re": tr.r.real,
            "r_im": tr.r.imag,
            "T": abs(tr.t) ** 2,
            "R": abs(tr.r) ** 2,
        }

    return _guard(body)


@app.post("/delay")
def delay(req: DelayRequest) -> dict:
    def body():
        system = "single" if req.L is None else "dual"
        tau = delay_time(
            system, (req.kx, req.ky), req.delta, req.a, req.L,
            include_evanescent=req.include_evanescent,
        )
        return {"tau": tau}

    return _guard(body)


@app.post("/tmatrix")
def tmatrix(req: TMatrixRequest) -> dict:
    def body():
        res = t_matrix(
            (req.Kx, req.Ky), 2.0 * req.delta, req.a, L=req.L,
            include_evanescent=req.include_evanescent, n_base=req.n_base,
        )
        out = {"doubling_change": res.doubling_change}
        if req.L is None:
            out.update({"t_re": res.value.real, "t_im": res.value.imag})
        else:
            out.update(
                {
                    "t_even_re": res.values[0].real,
                    "t_even_im": res.values[0].imag,
                    "t_odd_re": res.values[1].real,
                    "t_odd_im": res.values[1].imag,
                }
            )
        return out

    return _guard(body)


@app.post("/g2-analytic")
def g2_analytic_point(req: G2Request) -> dict:
    def body():
        channels = None
        if req.channels:
            text = req.channels.upper()
            channels = (text[0], text[-1])
        value = g2_analytic(req.delta, req.a, req.w0, req.t, L=req.L, channels=channels)
        return {"g2": float(value)}

    return _guard(body)
