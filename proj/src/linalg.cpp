#include "setid/linalg.hpp"

#include "setid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace setid::linalg {

Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& sym, double tol, int max_sweeps)
{
    if (sym.rows() != sym.cols())
        throw ShapeError("jacobi_eigenvalues: matrix must be square");
    Eigen::MatrixXd a = sym;
    const Eigen::Index n = a.rows();
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * scale)
            break;

        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double apr = a(p, r);
                    const double aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
            }
        }
    }
    Eigen::VectorXd ev = a.diagonal();
    std::sort(ev.begin(), ev.end());
    return ev;
}

double min_eigenvalue(const Eigen::MatrixXd& sym)
{
    if (sym.rows() == 1 && sym.cols() == 1)
        return sym(0, 0);
    if (sym.rows() == 2 && sym.cols() == 2) {
        const double mean = 0.5 * (sym(0, 0) + sym(1, 1));
        const double half = 0.5 * (sym(0, 0) - sym(1, 1));
        const double off = 0.5 * (sym(0, 1) + sym(1, 0));
        return mean - std::hypot(half, off);
    }
    return jacobi_eigenvalues(sym)(0);
}

} // namespace setid::linalg
