#pragma once

#include "survsynth/dataset.hpp"
#include "survsynth/mcm_net.hpp"

#include <vector>

namespace survsynth::testing {

// Two covariates (x numeric, flag binary) plus duration and event.
inline FeatureSchema toy_schema() {
    return FeatureSchema({{"x", FeatureKind::Numeric, FeatureRole::Covariate},
                          {"flag", FeatureKind::Binary, FeatureRole::Covariate},
                          {"time", FeatureKind::Numeric, FeatureRole::Duration},
                          {"event", FeatureKind::Binary, FeatureRole::Event}});
}

inline Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline const Dataset& stub_ckd() {
    static const Dataset ds = make_stub_dataset(ckd_schema(), ckd_marginals(), 491, 11);
    return ds;
}

// Briefly trained network on the stub; enough for plumbing tests.
inline const McmBundle& small_bundle() {
    static const McmBundle bundle = [] {
        McmBundle b;
        b.preprocess = fit_preprocessor(stub_ckd());
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.hidden_dim = 16;
        cfg.seed = 1;
        b.network = train(transform(b.preprocess, stub_ckd()), cfg, stub_ckd().schema().hash()).model;
        return b;
    }();
    return bundle;
}

}  // namespace survsynth::testing
