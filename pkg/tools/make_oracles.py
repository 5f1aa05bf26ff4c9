"""Independent reference values for the test suite.

Every number printed here is computed with mpmath at 40 digits, from
closed forms or adaptive quadrature, without importing the package
under test. The printed literals are frozen into tests/ next to a
comment naming the method used.

Run: python3 tools/make_oracles.py
"""

import mpmath as mp

mp.mp.dps = 40


def gaussian_pdf(x, mu, sigma):
    return mp.exp(-((x - mu) ** 2) / (2 * sigma**2)) / (sigma * mp.sqrt(2 * mp.pi))


def gaussian_cdf(x, mu, sigma):
    return mp.ncdf((x - mu) / sigma)


def show(label, value, digits=17):
    print(f"{label} = {mp.nstr(value, digits)}")


def header(title):
    print(f"\n# --- {title} ---")


header("Gaussian(0.3, 1.2): pdf/cdf/partial/exp moments by closed form + quad")
mu, sigma = mp.mpf("0.3"), mp.mpf("1.2")
for t in ("-1.1", "0.4", "2.7"):
    t = mp.mpf(t)
    show(f"pdf({t})", gaussian_pdf(t, mu, sigma))
    show(f"cdf({t})", gaussian_cdf(t, mu, sigma))
    # partial first moment by adaptive quadrature on (-inf, t]
    k = mp.quad(lambda u: u * gaussian_pdf(u, mu, sigma), [-mp.inf, t])
    show(f"partial({t})", k)
for a in ("-0.9", "1.3"):
    a = mp.mpf(a)
    show(f"expmom({a})", mp.e ** (a * mu + a**2 * sigma**2 / 2))

header("Laplace(-0.2, 0.7): closed forms + quad")
mu, b = mp.mpf("-0.2"), mp.mpf("0.7")


def laplace_pdf(x):
    return mp.exp(-abs(x - mu) / b) / (2 * b)


for t in ("-0.8", "0.1", "1.6"):
    t = mp.mpf(t)
    # the kink at mu must be an explicit quadrature breakpoint
    pts = [-mp.inf, mu, t] if t > mu else [-mp.inf, t]
    show(f"pdf({t})", laplace_pdf(t))
    show(f"cdf({t})", mp.quad(laplace_pdf, pts))
    show(f"partial({t})", mp.quad(lambda u: u * laplace_pdf(u), pts))
a = mp.mpf("0.9")  # inside the band (-1/b, 1/b) = (-1.43, 1.43)
show(f"expmom({a})", mp.e ** (a * mu) / (1 - (a * b) ** 2))

header("Mixture p=2/3 N(-1/2, 3/10) + 1/3 N(1, 1) (the Fig2-style law)")
p, a1, b1, mu2, s2 = (mp.mpf(v) for v in ("2/3 0.5 0.3 1 1".split()))
a1 = -a1


def mix_pdf(x):
    return p * gaussian_pdf(x, a1, b1) + (1 - p) * gaussian_pdf(x, mu2, s2)


for t in ("-0.5", "0.7"):
    t = mp.mpf(t)
    show(f"pdf({t})", mix_pdf(t))
    show(f"cdf({t})", p * gaussian_cdf(t, a1, b1) + (1 - p) * gaussian_cdf(t, mu2, s2))
    show(f"partial({t})", mp.quad(lambda u: u * mix_pdf(u), [-mp.inf, t]))
show("mean", mp.quad(lambda u: u * mix_pdf(u), [-mp.inf, mp.inf]))
ez2 = p * (a1**2 + b1**2) + (1 - p) * (mu2**2 + s2**2)
show("E[Z^2]", ez2)
show("E[Z^2]/4", ez2 / 4)
show("var_gauss01/4", mp.mpf(1) / 4)

header("solve_alpha roots: E[e^{alpha z}] = 1, alpha != 0")
# Gaussian(mu, sigma): exp(alpha mu + alpha^2 sigma^2/2) = 1 -> alpha = -2 mu / sigma^2
show("gaussian(-0.25, 1)", mp.mpf("0.5"))
show("gaussian(0.4, 1.5)", -2 * mp.mpf("0.4") / mp.mpf("1.5") ** 2)
# Laplace(mu, b): exp(alpha mu)/(1 - alpha^2 b^2) = 1, root by bisection at 40 digits
mu, b = mp.mpf("-0.2"), mp.mpf("0.7")
root = mp.findroot(lambda s: s * mu - mp.log(1 - (s * b) ** 2), mp.mpf("0.6"))
show("laplace(-0.2, 0.7)", root)

header("deterministic matrix products: log spectral radius of [[1, e],[e c, c]]")
for e, c in ((mp.mpf("0.5"), mp.mpf(1)), (mp.mpf("0.3"), mp.mpf(2))):
    tr, det = 1 + c, c * (1 - e**2)
    lam = (tr + mp.sqrt(tr**2 - 4 * det)) / 2
    show(f"L(eps={e}, z={c})", mp.log(lam))

header("weak-disorder closed form at eps = e^-10")
gamma = mp.euler
show("wd(e^-10)", 1 / (4 * (10 - mp.log(2) - gamma)))
show("euler_gamma", gamma)

header("map anchors: hk(x) = sp(x+k) - sp(x-k) - k at 40 digits")


def sp(t):
    return mp.log(1 + mp.e**t)


for k, x in ((mp.mpf("7.3"), mp.mpf("1.234")), (mp.mpf("2.0"), mp.mpf("-3.5"))):
    show(f"hk(k={k}, x={x})", sp(x + k) - sp(x - k) - k)
show("edge_map(1.75)", sp(mp.mpf("1.75")))
show("hk'(0) at k=3", mp.tanh(mp.mpf(3) / 2))

header("3-cell tabulated density on knots (-1, -0.4, 0.1, 0.9)")
# hat-like piecewise-linear pdf; normalization computed here, then
# moments of the normalized density by exact quadrature
xs = [mp.mpf(v) for v in ("-1 -0.4 0.1 0.9".split())]
ps = [mp.mpf(v) for v in ("0.2 1.1 0.8 0.0".split())]


def raw_pdf(u):
    for (x0, x1, p0, p1) in zip(xs[:-1], xs[1:], ps[:-1], ps[1:]):
        if x0 <= u <= x1:
            return p0 + (p1 - p0) * (u - x0) / (x1 - x0)
    return mp.mpf(0)


norm = mp.quad(raw_pdf, xs)
show("norm", norm)
show("mean", mp.quad(lambda u: u * raw_pdf(u), xs) / norm)
show("var", mp.quad(lambda u: u**2 * raw_pdf(u), xs) / norm
     - (mp.quad(lambda u: u * raw_pdf(u), xs) / norm) ** 2)
for t in ("-0.7", "0.3"):
    t = mp.mpf(t)
    pts = [v for v in xs if v < t] + [t]
    show(f"cdf({t})", mp.quad(raw_pdf, pts) / norm)
    show(f"partial({t})", mp.quad(lambda u: u * raw_pdf(u), pts) / norm)
show("expmom(0.8)", mp.quad(lambda u: mp.e ** (mp.mpf("0.8") * u) * raw_pdf(u), xs) / norm)
show("expmom(-2.0)", mp.quad(lambda u: mp.e ** (mp.mpf("-2.0") * u) * raw_pdf(u), xs) / norm)
