"""Independent high-precision re-derivations used to freeze expected values.

Written directly from the closed-form expressions with mpmath, sharing no
code with the package.
"""

import mpmath as mp

mp.mp.dps = 40


def rayleigh_range_km(radius_m, wavelength_nm):
    return mp.pi * mp.mpf(radius_m) ** 2 / (2 * mp.mpf(wavelength_nm) * mp.mpf("1e-9")) / 1000


def geometric_db(distance_km, radius_m, wavelength_nm):
    z = rayleigh_range_km(radius_m, wavelength_nm)
    d = mp.mpf(distance_km)
    if d <= 2 * z:
        return mp.mpf(0)
    return 10 * mp.log10((1 + ((d - z) / z) ** 2) / 2)


def mie_db_per_km(wavelength_nm, visibility_km):
    v = mp.mpf(visibility_km)
    if v > 50:
        p = mp.mpf("1.6")
    elif v >= 6:
        p = mp.mpf("1.3")
    else:
        p = mp.mpf("0.585") * mp.cbrt(v)
    return 10 * mp.log10(mp.e) * mp.mpf("3.91") / v * (mp.mpf(wavelength_nm) / 550) ** (-p)


def rain_db_per_km(rate):
    return mp.mpf("1.076") * mp.mpf(rate) ** mp.mpf("0.67")


def rayleigh_db_per_km(wavelength_nm):
    nu = mp.mpf(10) ** 4 / (mp.mpf(wavelength_nm) / 1000)
    return nu**4 / (mp.mpf("9.26799e18") - mp.mpf("1.07123e9") * nu**2)


def turbulence_db(wavelength_nm, distance_km, cn2):
    k = 2 * mp.pi / (mp.mpf(wavelength_nm) * mp.mpf("1e-9"))
    d = mp.mpf(distance_km) * 1000
    return 2 * mp.sqrt(mp.mpf("1.23") * k ** (mp.mpf(7) / 6) * mp.mpf(cn2) * d ** (mp.mpf(11) / 6))


def h2(x):
    x = mp.mpf(x)
    if x in (0, 1):
        return mp.mpf(0)
    return -x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2)


def pa_cost(eps_sec):
    return 6 * mp.log(19 / mp.mpf(eps_sec), 2)


def ec_leak(q, n, eps_cor, f=mp.mpf("1.12")):
    return f * n * h2(q) + mp.log(2 / mp.mpf(eps_cor), 2)


def planck_um(t, wl_um):
    h, c, kb = mp.mpf("6.62607015e-34"), mp.mpf("2.99792458e8"), mp.mpf("1.380649e-23")
    lam = mp.mpf(wl_um) * mp.mpf("1e-6")
    return 2 * h * c**2 / lam**5 / mp.expm1(h * c / (lam * kb * t)) * mp.mpf("1e-6")


def wien_peak_um(t):
    """Wien peak from the root of the Planck derivative, not the 2897.77 constant."""
    x = mp.findroot(lambda x: (x - 5) * mp.exp(x) + 5, 4.9)
    h, c, kb = mp.mpf("6.62607015e-34"), mp.mpf("2.99792458e8"), mp.mpf("1.380649e-23")
    return h * c / (x * kb * t) * mp.mpf("1e6")


def pipeline_skl(tau, eta_det, dark_hz, mu1=0.5, mu2=0.25, pz=0.5, p1=0.5, clock=1e9,
                 e_mis=0.01, vis=0.98, ins_z=1, ins_x=3, dead=25e-9, n_target=1e8,
                 eps_sec=1e-15, eps_cor=1e-15):
    """End-to-end key length from scratch: counts, decoy bounds, key length.

    Returns (skl_floor, total_pulses, details).
    """
    mpf = mp.mpf
    tau, eta_det = mpf(tau), mpf(eta_det)
    pdc = min(mpf(dark_hz) / mpf(clock), mpf(1))
    eta = {"Z": tau * 10 ** (-mpf(ins_z) / 10) * eta_det, "X": tau * 10 ** (-mpf(ins_x) / 10) * eta_det}
    e_int = {"Z": mpf(e_mis), "X": mpf(e_mis) + (1 - mpf(vis)) / 2}
    mus = {"Z": (mpf(mu1), mpf(mu2)), "X": (mpf(mu1) / 2, mpf(mu2) / 2)}
    pa = {"Z": mpf(pz), "X": 1 - mpf(pz)}
    pk = (mpf(p1), 1 - mpf(p1))

    def D(mu, e):
        return 1 - (1 - pdc) * mp.exp(-mu * e)

    def Q(mu, e, ei):
        return (ei * (1 - mp.exp(-mu * e)) + pdc / 2 * mp.exp(-mu * e)) / D(mu, e)

    fdead = {}
    for arm in "ZX":
        clicks = sum(pa[a] * pk[i] * D(mus[a][i], eta[arm]) for a in "ZX" for i in (0, 1)) / 2
        fdead[arm] = 1 / (1 + clicks * mpf(clock) * mpf(dead))
    rate = {(b, i): pa[b] / 2 * pk[i] * D(mus[b][i], eta[b]) * fdead[b] for b in "ZX" for i in (0, 1)}
    N = mp.ceil(mpf(n_target) / (rate["Z", 0] + rate["Z", 1]))
    n = {c: mp.floor(N * r) for c, r in rate.items()}
    m = {c: mp.floor(Q(mus[c[0]][c[1]], eta[c[0]], e_int[c[0]]) * n[c]) for c in n}

    eps = mpf(eps_sec) / 21

    def delta(x):
        return mp.sqrt(x / 2 * mp.log(1 / eps))

    out = {}
    for b in "ZX":
        k1, k2 = mus[b]
        nb, mb = n[b, 0] + n[b, 1], m[b, 0] + m[b, 1]
        t0 = pk[0] * mp.exp(-k1) + pk[1] * mp.exp(-k2)
        t1 = pk[0] * mp.exp(-k1) * k1 + pk[1] * mp.exp(-k2) * k2
        np1 = mp.exp(k1) / pk[0] * (n[b, 0] + delta(nb))
        nm2 = mp.exp(k2) / pk[1] * (n[b, 1] - delta(nb))
        mp1 = mp.exp(k1) / pk[0] * (m[b, 0] + delta(mb))
        mm2 = mp.exp(k2) / pk[1] * (m[b, 1] - delta(mb))
        mp2 = mp.exp(k2) / pk[1] * (m[b, 1] + delta(mb))
        s0l = min(max(0, t0 / (k1 - k2) * (k1 * nm2 - k2 * np1)), nb)
        s0u = min(max(0, 2 * (t0 * mp2 + delta(nb))), nb)
        s1l = t1 * k1 / (k2 * (k1 - k2)) * (nm2 - (k2 / k1) ** 2 * np1 - (k1**2 - k2**2) / k1**2 * s0u / t0)
        v1u = t1 / (k1 - k2) * (mp1 - mm2)
        out[b] = dict(n=nb, m=mb, s0l=s0l, s1l=s1l, v1u=v1u)
    nz = out["Z"]["n"]
    s0 = out["Z"]["s0l"]
    s1z = min(out["Z"]["s1l"], nz - s0)
    s1x = min(out["X"]["s1l"], out["X"]["n"])
    v = min(max(0, out["X"]["v1u"]), out["X"]["n"])
    b = v / s1x
    gam = mp.sqrt((s1z + s1x) * (1 - b) * b / (s1z * s1x * mp.log(2))
                  * mp.log((s1z + s1x) / (s1z * s1x * (1 - b) * b) / eps**2, 2))
    phi = min(b + gam, mpf("0.5"))
    qz = out["Z"]["m"] / nz
    bound = s0 + s1z * (1 - h2(phi)) - ec_leak(qz, nz, eps_cor) - pa_cost(eps_sec)
    return int(mp.floor(bound)) if bound > 0 else 0, int(N), dict(phi=phi, s0=s0, s1z=s1z, qz=qz)
