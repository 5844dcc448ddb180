#include <algorithm>
#include <cmath>
#include <limits>

#include "cbir/numerics.hpp"

namespace cbir {

namespace {

// Square scratch matrix with cheap indexing for the in-place kernels below.
class Dense {
public:
    explicit Dense(const ChannelMatrix& m) : n_(m.rows()), a_(m.values().begin(), m.values().end()) {}
    std::size_t n() const { return n_; }
    double& operator()(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }

private:
    std::size_t n_;
    std::vector<double> a_;
};

double sign_of(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Diagonal similarity by powers of the radix so row and column norms are
// comparable; exact in floating point, improves eigenvalue accuracy.
void balance(Dense& a) {
    constexpr double radix = std::numeric_limits<double>::radix;
    constexpr double sqrdx = radix * radix;
    const std::size_t n = a.n();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Householder reduction to upper Hessenberg form.
void to_hessenberg(Dense& h) {
    const std::size_t n = h.n();
    if (n < 3) return;
    std::vector<double> ort(n);
    for (std::size_t m = 1; m + 1 < n; ++m) {
        double scale = 0.0;
        for (std::size_t i = m; i < n; ++i) scale += std::abs(h(i, m - 1));
        if (scale == 0.0) continue;

        double hh = 0.0;
        for (std::size_t i = n; i-- > m;) {
            ort[i] = h(i, m - 1) / scale;
            hh += ort[i] * ort[i];
        }
        double g = std::sqrt(hh);
        if (ort[m] > 0) g = -g;
        hh -= ort[m] * g;
        ort[m] -= g;

        for (std::size_t j = m; j < n; ++j) {
            double f = 0.0;
            for (std::size_t i = m; i < n; ++i) f += ort[i] * h(i, j);
            f /= hh;
            for (std::size_t i = m; i < n; ++i) h(i, j) -= f * ort[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double f = 0.0;
            for (std::size_t j = m; j < n; ++j) f += ort[j] * h(i, j);
            f /= hh;
            for (std::size_t j = m; j < n; ++j) h(i, j) -= f * ort[j];
        }
        h(m, m - 1) = scale * g;
        for (std::size_t i = m + 1; i < n; ++i) h(i, m - 1) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix, deflating 1x1 and
// 2x2 trailing blocks. The matrix is destroyed.
std::vector<std::complex<double>> hessenberg_qr(Dense& a) {
    const int n = static_cast<int>(a.n());
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<std::complex<double>> w(n);

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    const long max_sweeps = 100L * n;
    long sweeps = 0;
    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                w[nn--] = x + t;
            } else {
                double y = a(nn - 1, nn - 1);
                double ww = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        w[nn - 1] = w[nn] = x + z;
                        if (z != 0.0) w[nn] = x - ww / z;
                    } else {
                        w[nn] = {x + p, -z};
                        w[nn - 1] = std::conj(w[nn]);
                    }
                    nn -= 2;
                } else {
                    if (++sweeps > max_sweeps)
                        throw Error(ErrorCode::NoConvergence,
                                    "QR iteration exceeded " + std::to_string(max_sweeps) + " sweeps");
                    if (its > 0 && its % 10 == 0) {
                        // Exceptional shift to break cycles.
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0, q = 0, r = 0, z = 0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - ww) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a(i + 2, i) = 0.0;
                        if (i != m) a(i + 2, i - 1) = 0.0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = (k + 1 != nn) ? a(k + 2, k - 1) : 0.0;
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k + 1 != nn) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k + 1 != nn) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (nn >= 0 && l + 1 < nn);
    }
    return w;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const ChannelMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw Error(ErrorCode::NotSquare, "eigenvalues need a square matrix");
    for (double v : m.values())
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");
    Dense a(m);
    balance(a);
    to_hessenberg(a);
    return hessenberg_qr(a);
}

double spectral_radius(const ChannelMatrix& m) {
    double radius = 0.0;
    for (const auto& lambda : eigenvalues(m)) radius = std::max(radius, std::abs(lambda));
    return radius;
}

}  // namespace cbir
