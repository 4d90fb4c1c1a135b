#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "pdmp/spectral.hpp"

namespace pdmp {

// Channel sites z_i with per-channel current weights w_i (the full prefactor
// of channel i's contribution to the reaction: 1/N by default, 1/(C N_pop) for
// the Morris-Lecar populations).
struct ChannelLayout {
    Eigen::VectorXd positions;
    Eigen::VectorXd weights;

    // z_i = i/(n+1), weights 1/n
    static ChannelLayout regular(int n);

    int size() const { return static_cast<int>(positions.size()); }
};

// Precomputed f-basis pairing matrix of the channel sources: column i holds
// f_k(z_i) (pointlike) or (phi_{z_i}, f_k)_{L2} (mollified). The same matrix
// serves measurement and source injection: y = W^T c gives u(z_i) resp.
// (u, phi_{z_i}); g = W q injects per-channel scalars into mode space.
struct SourceGeometry {
    std::shared_ptr<const SpectralBasis> basis;
    ChannelLayout layout;
    bool mollified = false;
    double kappa = 0.0;
    Eigen::MatrixXd W;             // K x N
    Eigen::VectorXd source_norms;  // ||phi_{z_i}||_{L2} (mollified) or sup_k |W_ki|

    static SourceGeometry pointlike(std::shared_ptr<const SpectralBasis> basis,
                                    ChannelLayout layout);
    static SourceGeometry make_mollified(std::shared_ptr<const SpectralBasis> basis,
                                         ChannelLayout layout, double kappa);

    int n_channels() const { return layout.size(); }
    int n_modes() const { return basis->mode_count(); }
};

}  // namespace pdmp
