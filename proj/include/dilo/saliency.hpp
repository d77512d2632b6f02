#ifndef DILO_SALIENCY_HPP
#define DILO_SALIENCY_HPP

#include <string>
#include <vector>

#include "dilo/image.hpp"
#include "dilo/superpixel.hpp"

namespace dilo {

enum class SaliencyMethod { GS, MC, RBD };

std::string to_string(SaliencyMethod m);
SaliencyMethod saliency_method_from_string(const std::string &s);

struct SaliencyParams {
  double sigma_clr = 0.1;  // color bandwidth, on rescaled Lab
  double sigma_bnd = 1.0;  // boundary-connectivity bandwidth
  double sigma_spa = 0.25; // spatial bandwidth, normalized coordinates
  double mu = 0.1;         // smoothness floor on edge weights
  SlicParams slic;
};

/// Per-pixel foreground score in [0,1] with provenance. Maps are span
/// normalized (min 0, max 1); a constant map comes out all zero.
struct SaliencyMap {
  Mask mask;
  SaliencyMethod method = SaliencyMethod::RBD;
  SaliencyParams params;
};

/// Geodesic saliency: distance to a virtual background node wired to every
/// boundary region with weight zero.
SaliencyMap saliency_gs(const Image &img, const SaliencyParams &params = {});

/// Absorbing-Markov-chain saliency: boundary regions are duplicated as
/// absorbing states and saliency is the expected absorption time.
SaliencyMap saliency_mc(const Image &img, const SaliencyParams &params = {});

/// Robust-background-detection saliency: boundary connectivity yields
/// background weights, background-weighted contrast yields foreground
/// weights, and a smoothness-regularized quadratic objective is solved for
/// the final mask.
SaliencyMap saliency_rbd(const Image &img, const SaliencyParams &params = {});

SaliencyMap compute_saliency(SaliencyMethod method, const Image &img,
                             const SaliencyParams &params = {});

/// BndCon(p) = Len(p)/sqrt(Area(p)) over the geodesic distance matrix,
/// with Area and Len the soft region counts under a Gaussian color kernel.
std::vector<double> boundary_connectivity(
    const RegionGraph &graph, const std::vector<std::vector<double>> &geo,
    const SaliencyParams &params);

/// Expected steps to absorption for a substochastic transient matrix Q:
/// t = (I-Q)^-1 * 1. Throws internal_error if I-Q is singular.
std::vector<double> absorption_times(const std::vector<std::vector<double>> &q);

/// Solve the RBD quadratic: min_s  sum w_bg s^2 + sum w_fg (s-1)^2
/// + sum_{edges} w_ij (s_i - s_j)^2. Edges are (i, j, w_ij) triples.
/// Checks the residual ||Ls-b||_inf < 1e-8 and reports it on failure.
std::vector<double>
solve_background_optimization(const std::vector<double> &w_bg,
                              const std::vector<double> &w_fg,
                              const std::vector<std::array<int, 2>> &edges,
                              const std::vector<double> &edge_weights);

/// Pixel >= threshold maps to 1, else 0.
Mask binarize(const Mask &map, double threshold);

/// Adaptive default threshold: min(2 * mean, 0.9).
double adaptive_threshold(const Mask &map);

/// Max over 256 uniform thresholds of (1+b2)PR/(b2 P+R); P := 1 when
/// nothing is predicted, F := 0 when the denominator vanishes. Ground truth
/// must be binary and non-empty.
double f_beta(const Mask &pred, const Mask &gt, double beta2 = 0.3);

/// Mean absolute error of the continuous map against the ground truth.
double mae(const Mask &pred, const Mask &gt);

} // namespace dilo

#endif
