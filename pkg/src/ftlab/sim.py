"""Fixed-step closed-loop simulation, runtime monitors and trace metrics.

One run wires plant + regression + regressor extension + controller and
advances everything with a shared explicit-Euler step.  Per step:

1. form measurements (exact in case1, noisy in case2);
2. evaluate the control torque from the measurements;
3. advance the regression filters and the regressor extension with the
   measured signals and the commanded torque;
4. evaluate the adaptation rate and Euler-update the estimates;
5. evaluate friction from the true velocity (case2);
6. Euler-update the plant state.

Runs are deterministic: the only "noise" is a fixed sinusoid, so identical
configurations produce bit-identical traces.
"""

from __future__ import annotations

import dataclasses
import io
from dataclasses import dataclass, field

import numpy as np

from . import control, drem, mathx
from .errors import ConfigError, NumericalDegeneracyError
from .plant import (FrictionModel, NoiseModel, PhysicalParams, Plant,
                    ThetaBounds, default_params)
from .regression import make_regression

CONTROLLERS = ("c1", "c2", "c3", "c4")
SCENARIOS = ("case1", "case2")
PARAMETERIZATIONS = ("power_balance", "force_balance")
DRES = ("least_squares", "kreisselmeier")


@dataclass
class SimConfig:
    """Complete description of one run; defaults reproduce the reference
    c1/case1 study (regulation to q_d = [2, 2] from q0 = [3, 0])."""

    controller: str = "c1"
    scenario: str = "case1"
    parameterization: str | None = None     # default: force_balance
    dre: str | None = None                  # default: per controller
    dt: float = 5e-4
    t_final: float = 10.0
    q_d: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0]))
    q0: np.ndarray = field(default_factory=lambda: np.array([3.0, 0.0]))
    qd0: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0]))
    params: PhysicalParams = field(default_factory=default_params)
    theta_bar: np.ndarray = field(default_factory=lambda: np.array([2.0, 8.0]))
    theta_hat0: np.ndarray | None = None
    friction: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.4]))
    noise_amplitude: float = 0.005
    noise_frequency: float = 100.0
    ftpd: control.FtPdGains = field(default_factory=control.FtPdGains)
    adapt: control.CompositeAdaptGains = field(default_factory=control.CompositeAdaptGains)
    tsm: control.TsmParams = field(default_factory=control.TsmParams)
    sl: control.SlotineLiLsParams = field(default_factory=control.SlotineLiLsParams)
    ls: drem.LsDreParams = field(default_factory=drem.LsDreParams)
    kreis: drem.KreisParams = field(default_factory=drem.KreisParams)
    lambda0: float | None = None
    lambda1: float = 1.0
    settle_tol: float = 1e-3
    param_tol: float = 0.05
    gramian_start: float = 0.0
    gramian_window: float = 2.0

    def __post_init__(self):
        for name in ("q_d", "q0", "qd0", "theta_bar", "friction"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.theta_hat0 is not None:
            self.theta_hat0 = np.asarray(self.theta_hat0, dtype=float)

    @property
    def effective_parameterization(self) -> str:
        return self.parameterization or "force_balance"

    @property
    def effective_dre(self) -> str:
        if self.dre is not None:
            return self.dre
        return "least_squares" if self.controller == "c1" else "kreisselmeier"

    @property
    def effective_lambda0(self) -> float:
        # parameterization-specific default: the power signal carries the
        # integrator's full kinetic-energy discretization defect, so its
        # pipeline runs at a lower filter gain to keep the mixed regression
        # identity tight; the force signals tolerate (and the extension
        # convergence wants) a larger one
        if self.lambda0 is not None:
            return self.lambda0
        return 0.3 if self.effective_parameterization == "power_balance" else 1.5

    def validate(self):
        """Range and consistency checks; raises ConfigError naming the key."""
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.effective_parameterization not in PARAMETERIZATIONS:
            raise ConfigError(f"parameterization must be one of {PARAMETERIZATIONS}")
        if self.dre is not None and self.dre not in DRES:
            raise ConfigError(f"dre must be one of {DRES}, got {self.dre!r}")
        if self.controller == "c4" and self.effective_parameterization != "force_balance":
            raise ConfigError("controller c4 requires the force_balance parameterization")
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_final > self.dt:
            raise ConfigError("t_final must exceed dt")
        if not self.effective_lambda0 > 0.0 or not self.lambda1 > 0.0:
            raise ConfigError("lambda0 and lambda1 must be positive")
        for name in ("settle_tol", "param_tol", "gramian_window"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.gramian_start < self.t_final:
            raise ConfigError("gramian_start must lie inside [0, t_final)")
        n = 2
        for name in ("q_d", "q0", "qd0", "friction"):
            if getattr(self, name).shape != (n,):
                raise ConfigError(f"{name} must have length {n}")
        bounds = ThetaBounds(self.theta_bar)
        theta_u = Plant.two_link(self.params).theta.theta_u
        if not bounds.contains(theta_u):
            raise ConfigError("theta_bar does not contain the plant's potential "
                              "parameters (violates the known-bound assumption)")
        est_dim = 2 if self.controller in ("c1", "c2") else 5
        if self.theta_hat0 is not None and self.theta_hat0.shape != (est_dim,):
            raise ConfigError(f"theta_hat0 must have length {est_dim} for {self.controller}")
        if self.controller in ("c1", "c2"):
            init = self.theta_hat0 if self.theta_hat0 is not None else np.zeros(2)
            if np.linalg.norm(init - theta_u) > 2.0 * np.linalg.norm(self.theta_bar):
                raise ConfigError("theta_hat0 violates the initial-error bound "
                                  "|theta_tilde(0)| <= 2 |theta_bar|")


@dataclass
class Trace:
    """Per-step records on the uniform grid t_k = k dt (inclusive of both
    endpoints).  ``diagnostics`` holds controller-family specific series and
    ``meta`` the run description needed to interpret them."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    tau: np.ndarray
    theta_hat: np.ndarray
    delta: np.ndarray
    zeta1: np.ndarray
    v1: np.ndarray
    z1norm: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.size


def lyapunov_v1(e1, e2, theta_tilde_u, inertia, ftpd: control.FtPdGains,
                adapt: control.CompositeAdaptGains) -> float:
    """Runtime Lyapunov monitor of the composite loop.

    V1 = (g1+g2) V0 + g1 d1 tanh(e1)' M e2 + g1 d1 sum_i kd_lin_i ln cosh(e1_i)
         + (1/2) tt' Gamma^-1 tt,
    V0 = (r1 / 2 r2) e1' Kp <e1>^a + (1/2) e2' M e2.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    tt = np.asarray(theta_tilde_u, dtype=float)
    g12 = adapt.gamma1 + adapt.gamma2
    m_e2 = inertia @ e2
    v0 = (ftpd.r1 / (2.0 * ftpd.r2)) * float(e1 @ (ftpd.kp * mathx.signed_power_vec(e1, ftpd.a))) \
        + 0.5 * float(e2 @ m_e2)
    # ln(cosh(x)) via logaddexp for overflow safety at large |x|
    ln_cosh = np.logaddexp(e1, -e1) - np.log(2.0)
    return (g12 * v0
            + adapt.gamma1 * adapt.d1 * float(np.tanh(e1) @ m_e2)
            + adapt.gamma1 * adapt.d1 * float(ftpd.kd_lin @ ln_cosh)
            + 0.5 * float(tt @ (tt / adapt.gamma_diag)))


def _build_controller(config: SimConfig, plant: Plant):
    est_dim = 2 if config.controller in ("c1", "c2") else 5
    theta0 = config.theta_hat0 if config.theta_hat0 is not None else np.zeros(est_dim)
    if config.controller in ("c1", "c2"):
        # the closed-loop factorization requires the saturation exponent c = b
        adapt = dataclasses.replace(config.adapt, sat_c=config.ftpd.b)
        return control.CompositeFtController(config.ftpd, adapt, theta0), adapt
    if config.controller == "c3":
        return control.SwitchingTsmController(config.tsm, config.ftpd.a, theta0), config.adapt
    return control.SlotineLiLsController(config.sl, theta0), config.adapt


def run_closed_loop(config: SimConfig) -> Trace:
    """Integrate the closed loop and return the full trace."""
    config.validate()
    plant = Plant.two_link(config.params)
    theta_true = plant.theta
    l_dim = theta_true.size
    j_dim = theta_true.theta_u.size
    n = plant.n

    noisy = config.scenario == "case2"
    friction = FrictionModel(config.friction) if noisy else None
    noise = NoiseModel(config.noise_amplitude, config.noise_frequency) if noisy else None

    controller, adapt_eff = _build_controller(config, plant)
    regression = make_regression(config.effective_parameterization, plant,
                                 config.q0, config.qd0,
                                 config.effective_lambda0, config.lambda1)
    extension = None
    if config.controller in ("c1", "c2"):
        extension = drem.make_dre(config.effective_dre, l_dim, j_dim,
                                  ls_params=config.ls, kreis_params=config.kreis)
    elif config.controller == "c3":
        # the switching estimator consumes the classical extension filters
        kp = dataclasses.replace(config.kreis, lambda3=1.0)
        extension = drem.KreisselmeierDre(l_dim, j_dim, kp)

    # floor semantics with slack for float division noise on exact multiples
    n_steps = int(np.floor(config.t_final / config.dt + 1e-9))
    n_rec = n_steps + 1
    est_dim = controller.theta_hat_u.size if config.controller in ("c1", "c2") \
        else controller.theta_hat.size

    rec = {
        "t": np.empty(n_rec), "q": np.empty((n_rec, n)), "qd": np.empty((n_rec, n)),
        "e1": np.empty((n_rec, n)), "e2": np.empty((n_rec, n)),
        "tau": np.empty((n_rec, n)), "theta_hat": np.empty((n_rec, est_dim)),
        "delta": np.empty(n_rec), "zeta1": np.empty(n_rec),
        "v1": np.empty(n_rec), "z1norm": np.empty(n_rec),
    }
    n_out = 1 if config.effective_parameterization == "power_balance" else n
    diag = {"y": np.empty((n_rec, n_out)), "omega": np.empty((n_rec, n_out, l_dim))}
    if config.controller in ("c1", "c2", "c3"):
        diag["Y_mixed"] = np.empty((n_rec, l_dim))
    if isinstance(extension, drem.LeastSquaresDre):
        diag.update(F=np.empty((n_rec, l_dim, l_dim)), z_forget=np.empty(n_rec),
                    rho_hat=np.empty((n_rec, l_dim)), beta=np.empty(n_rec))
    if isinstance(extension, drem.KreisselmeierDre):
        diag.update(phi1=np.empty((n_rec, l_dim)), phi2=np.empty((n_rec, l_dim, l_dim)))
    if config.controller == "c3":
        diag["branch"] = np.empty(n_rec, dtype=np.int8)
    if config.controller == "c4":
        diag.update(P=np.empty((n_rec, l_dim, l_dim)), e_p=np.empty((n_rec, n)),
                    beta=np.empty(n_rec))

    q = config.q0.astype(float).copy()
    qd = config.qd0.astype(float).copy()
    dt = config.dt
    b_exp = config.ftpd.b
    d_exp = adapt_eff.sat_d
    theta_u_true = theta_true.theta_u

    for k in range(n_rec):
        t = k * dt
        try:
            if noisy:
                q_m = q + noise.position(t)
                qd_m = qd + noise.velocity(t)
            else:
                q_m, qd_m = q, qd
            e1_m = q_m - config.q_d
            e2_m = qd_m

            if config.controller in ("c1", "c2"):
                psi_m = plant.psi(q_m)
                tau = controller.torque(e1_m, e2_m, psi_m)
            elif config.controller == "c3":
                tau = controller.torque(e1_m, e2_m, q_m, qd_m, plant.inertia(q_m))
            else:
                tau = controller.torque(e1_m, e2_m, q_m, qd_m)

            pair = regression.step(q_m, qd_m, tau, dt)
            theta_snapshot = (controller.theta_hat_u if config.controller in ("c1", "c2")
                              else controller.theta_hat).copy()

            delta = 0.0
            if extension is not None:
                extension.step(pair, dt)
                mixed = extension.mix()
                delta = mixed.delta

            if config.controller in ("c1", "c2"):
                rate = controller.adapt_rate(e1_m, e2_m, psi_m, mixed)
                controller.advance(rate, dt)
            elif config.controller == "c3":
                rate = controller.adapt_rate(extension.phi1, extension.phi2)
                controller.advance(rate, dt)
            else:
                theta_rate, p_rate = controller.rates(pair)
                controller.advance(theta_rate, p_rate, dt)
        except NumericalDegeneracyError as exc:
            raise NumericalDegeneracyError(f"step {k} (t = {t:.6g} s): {exc}") from exc

        e1 = q - config.q_d
        psi_true = psi_m if (not noisy and config.controller in ("c1", "c2")) \
            else plant.psi(q)
        theta_tilde_u = (theta_snapshot[-j_dim:] - theta_u_true)
        rec["t"][k] = t
        rec["q"][k] = q
        rec["qd"][k] = qd
        rec["e1"][k] = e1
        rec["e2"][k] = qd
        rec["tau"][k] = tau
        rec["theta_hat"][k] = theta_snapshot
        rec["delta"][k] = delta
        rec["zeta1"][k] = control.excitation_gain(delta, b_exp, d_exp)
        rec["v1"][k] = lyapunov_v1(e1, qd, theta_tilde_u, plant.inertia(q),
                                   config.ftpd, adapt_eff)
        rec["z1norm"][k] = float(np.linalg.norm(psi_true @ theta_tilde_u))

        diag["y"][k] = pair.y
        diag["omega"][k] = pair.omega
        if "Y_mixed" in diag:
            diag["Y_mixed"][k] = mixed.Y
        if isinstance(extension, drem.LeastSquaresDre):
            diag["F"][k] = extension.F
            diag["z_forget"][k] = extension.z
            diag["rho_hat"][k] = extension.rho_hat
            diag["beta"][k] = extension.last_beta
        if isinstance(extension, drem.KreisselmeierDre):
            diag["phi1"][k] = extension.phi1
            diag["phi2"][k] = extension.phi2
        if config.controller == "c3":
            diag["branch"][k] = 0 if controller.branch == "tsm" else 1
        if config.controller == "c4":
            diag["P"][k] = controller.P
            diag["e_p"][k] = pair.omega @ theta_snapshot - pair.y
            diag["beta"][k] = controller.last_beta

        if k < n_steps:
            tau_f = friction.torque(qd) if noisy else None
            qdd = plant.forward_dynamics(q, qd, tau, tau_f)
            q = q + dt * qd
            qd = qd + dt * qdd

    # c3 always runs the classical extension filters; c4 has its own gain law
    if config.controller in ("c1", "c2"):
        dre_used = config.effective_dre
    elif config.controller == "c3":
        dre_used = "kreisselmeier"
    else:
        dre_used = "none"
    meta = {
        "controller": config.controller, "scenario": config.scenario,
        "parameterization": config.effective_parameterization,
        "dre": dre_used,
        "dt": dt, "t_final": config.t_final,
        "theta_true": theta_true.stacked, "theta_u_true": theta_u_true,
        "q_d": config.q_d.copy(), "exponent_b": b_exp, "sat_d": d_exp,
        "settle_tol": config.settle_tol, "param_tol": config.param_tol,
    }
    return Trace(rec["t"], rec["q"], rec["qd"], rec["e1"], rec["e2"], rec["tau"],
                 rec["theta_hat"], rec["delta"], rec["zeta1"], rec["v1"],
                 rec["z1norm"], diagnostics=diag, meta=meta)


@dataclass
class Metrics:
    """Scalar figures of merit plus the monitor series used for excitation
    diagnostics."""

    settling_time: float
    steady_state_error: float
    param_convergence_time: float
    chattering_amplitude: float
    zeta1_integral: float
    zeta1_integral_series: np.ndarray
    min_eig_phi2: np.ndarray | None
    gramian_min_eig: float

    def to_text(self) -> str:
        lines = [
            f"settling_time={self.settling_time:.17g}",
            f"steady_state_error={self.steady_state_error:.17g}",
            f"param_convergence_time={self.param_convergence_time:.17g}",
            f"chattering_amplitude={self.chattering_amplitude:.17g}",
            f"zeta1_integral={self.zeta1_integral:.17g}",
            f"gramian_min_eig={self.gramian_min_eig:.17g}",
        ]
        if self.min_eig_phi2 is not None:
            lines.append(f"min_eig_phi2_final={float(self.min_eig_phi2[-1]):.17g}")
        return "\n".join(lines) + "\n"


def _last_exceed_time(t: np.ndarray, magnitude: np.ndarray, tol: float) -> float:
    over = np.nonzero(magnitude > tol)[0]
    return float(t[over[-1]]) if over.size else 0.0


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def compute_metrics(trace: Trace, settle_tol: float | None = None,
                    param_tol: float | None = None,
                    steady_fraction: float = 0.2,
                    gramian_start: float = 0.0,
                    gramian_window: float = 2.0) -> Metrics:
    """Evaluate all trace metrics.

    Settling / convergence times are the last instants at which the monitored
    magnitude exceeds its tolerance; the steady-state window is the trailing
    ``steady_fraction`` of the trace.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    settle_tol = settle_tol if settle_tol is not None else trace.meta.get("settle_tol", 1e-3)
    param_tol = param_tol if param_tol is not None else trace.meta.get("param_tol", 0.05)

    e1_norm = np.linalg.norm(trace.e1, axis=1)
    settling = _last_exceed_time(trace.t, e1_norm, settle_tol)

    tail = max(2, int(np.ceil(len(trace) * steady_fraction)))
    window = slice(len(trace) - tail, len(trace))
    steady_err = float(np.mean(e1_norm[window]))

    theta_u_true = trace.meta["theta_u_true"]
    j = theta_u_true.size
    tilde = np.linalg.norm(trace.theta_hat[:, -j:] - theta_u_true, axis=1)
    ref = tilde[0]
    param_time = 0.0 if ref == 0.0 else _last_exceed_time(trace.t, tilde, param_tol * ref)

    jumps = np.abs(np.diff(trace.tau, axis=0)).max(axis=1)
    chatter = float(jumps[window.start - 1:].max()) if len(trace) > 1 else 0.0

    zeta_series = _cumtrapz(trace.zeta1, trace.t)

    min_eig_phi2 = None
    if "phi2" in trace.diagnostics:
        # batched symmetric eigensolve; phi2 is re-symmetrized by the filter
        min_eig_phi2 = np.linalg.eigvalsh(trace.diagnostics["phi2"])[:, 0]

    gram = drem.excitation_gramian(trace.t, trace.diagnostics["omega"],
                                   gramian_start, gramian_window)
    gram_min = mathx.min_eig_sym(gram, sym_tol=1e-6)

    return Metrics(settling_time=settling, steady_state_error=steady_err,
                   param_convergence_time=param_time, chattering_amplitude=chatter,
                   zeta1_integral=float(zeta_series[-1]),
                   zeta1_integral_series=zeta_series,
                   min_eig_phi2=min_eig_phi2, gramian_min_eig=float(gram_min))


def trace_columns(trace: Trace) -> tuple[list[str], np.ndarray]:
    """Fixed CSV column layout."""
    k = trace.theta_hat.shape[1]
    header = (["t", "q1", "q2", "qd1", "qd2", "e11", "e12", "tau1", "tau2"]
              + [f"theta_hat_{i + 1}" for i in range(k)]
              + ["Delta", "zeta1", "V1", "z1norm"])
    data = np.column_stack([
        trace.t, trace.q, trace.qd, trace.e1, trace.tau, trace.theta_hat,
        trace.delta, trace.zeta1, trace.v1, trace.z1norm,
    ])
    return header, data


def write_trace_csv(trace: Trace, stream) -> None:
    """Serialize the trace; numbers keep 17 significant digits so a read-back
    reproduces every float64 exactly."""
    header, data = trace_columns(trace)
    stream.write(",".join(header) + "\n")
    for row in data:
        stream.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_trace_csv(stream) -> Trace:
    """Rebuild a Trace (without diagnostics) from its CSV serialization."""
    header = stream.readline().strip().split(",")
    data = np.loadtxt(stream, delimiter=",", ndmin=2)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    theta_cols = [name for name in header if name.startswith("theta_hat_")]
    theta_hat = np.column_stack([cols[c] for c in theta_cols])
    q = np.column_stack([cols["q1"], cols["q2"]])
    qd = np.column_stack([cols["qd1"], cols["qd2"]])
    e1 = np.column_stack([cols["e11"], cols["e12"]])
    tau = np.column_stack([cols["tau1"], cols["tau2"]])
    return Trace(t=cols["t"], q=q, qd=qd, e1=e1, e2=qd.copy(), tau=tau,
                 theta_hat=theta_hat, delta=cols["Delta"], zeta1=cols["zeta1"],
                 v1=cols["V1"], z1norm=cols["z1norm"])


def trace_csv_string(trace: Trace) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    return buf.getvalue()
