#include "pdmp/geometry.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/quadrature.hpp"

namespace pdmp {

ChannelLayout ChannelLayout::regular(int n) {
    if (n < 0) throw ConfigError("channel count must be >= 0");
    ChannelLayout layout;
    layout.positions.resize(n);
    layout.weights.resize(n);
    for (int i = 1; i <= n; ++i) {
        layout.positions[i - 1] = static_cast<double>(i) / (n + 1);
        layout.weights[i - 1] = 1.0 / n;
    }
    return layout;
}

SourceGeometry SourceGeometry::pointlike(std::shared_ptr<const SpectralBasis> basis,
                                         ChannelLayout layout) {
    SourceGeometry g;
    g.basis = std::move(basis);
    g.layout = std::move(layout);
    const int K = g.basis->mode_count();
    const int N = g.layout.size();
    g.W.resize(K, N);
    g.source_norms.resize(N);
    for (int i = 0; i < N; ++i) {
        g.W.col(i) = g.basis->evaluate_all(g.layout.positions[i], BasisKind::L2);
        g.source_norms[i] = g.W.col(i).cwiseAbs().maxCoeff();
    }
    return g;
}

SourceGeometry SourceGeometry::make_mollified(std::shared_ptr<const SpectralBasis> basis,
                                              ChannelLayout layout, double kappa) {
    SourceGeometry g;
    g.basis = std::move(basis);
    g.layout = std::move(layout);
    g.mollified = true;
    g.kappa = kappa;
    const int K = g.basis->mode_count();
    const int N = g.layout.size();
    g.W.resize(K, N);
    g.source_norms.resize(N);
    for (int i = 0; i < N; ++i) {
        const Mollifier phi(g.layout.positions[i], kappa, *g.basis);
        g.W.col(i) = phi.pairings();
        g.source_norms[i] = std::sqrt(integrate_adaptive(
            [&](double x) { return phi(x) * phi(x); }, phi.center() - kappa,
            phi.center() + kappa, 1e-12));
    }
    return g;
}

}  // namespace pdmp
