#include "regimehmm/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "regimehmm/kernels.hpp"

namespace regimehmm::train {

namespace {

constexpr double kMinStatePrior = 1e-12;

hmm::ChainParams initial_chain(int n_states) {
    hmm::ChainParams chain;
    chain.n_states = n_states;
    chain.pi.assign(n_states, 1.0 / n_states);
    chain.trans = Matrix(n_states, n_states);
    if (n_states == 1) {
        chain.trans(0, 0) = 1.0;
        return chain;
    }
    const double off = 0.2 / (n_states - 1);
    for (int i = 0; i < n_states; ++i) {
        for (int j = 0; j < n_states; ++j) {
            chain.trans(i, j) = (i == j) ? 0.8 : off;
        }
    }
    return chain;
}

void update_chain(hmm::ChainParams& chain, const hmm::PosteriorMatrix& post) {
    if (post.gamma.cols() >= 2) {
        chain.trans = hmm::reestimate_transitions(post);
    }
    double total = 0.0;
    for (int i = 0; i < chain.n_states; ++i) {
        chain.pi[i] = post.gamma(i, 0);
        total += chain.pi[i];
    }
    for (double& p : chain.pi) {
        p /= total;
    }
}

double relative_improvement(double current, double previous) {
    return (current - previous) / (std::abs(previous) + 1e-12);
}

void check_observations(const ObservationMatrix& obs, const FitConfig& config) {
    config.validate();
    if (obs.n_rows() <= static_cast<std::size_t>(config.n_states)) {
        fail(ErrorCode::degenerate_input,
             "need more observations than states, got " + std::to_string(obs.n_rows()));
    }
    if (!obs.all_finite()) {
        fail(ErrorCode::nonfinite_input, "observations contain non-finite cells");
    }
}

Matrix posterior_targets(const Matrix& gamma) {
    Matrix targets(gamma.cols(), gamma.rows());
    for (std::size_t t = 0; t < gamma.cols(); ++t) {
        for (std::size_t i = 0; i < gamma.rows(); ++i) {
            targets(t, i) = gamma(i, t);
        }
    }
    return targets;
}

hmm::EmissionLogMatrix scaled_likelihood_logs(const Matrix& gamma_hat,
                                              std::span<const double> priors) {
    hmm::EmissionLogMatrix logs;
    logs.values = Matrix(priors.size(), gamma_hat.rows());
    std::vector<double> log_prior(priors.size());
    for (std::size_t j = 0; j < priors.size(); ++j) {
        log_prior[j] = std::log(std::max(priors[j], kMinStatePrior));
    }
    for (std::size_t t = 0; t < gamma_hat.rows(); ++t) {
        for (std::size_t j = 0; j < priors.size(); ++j) {
            logs.values(j, t) = std::max(std::log(gamma_hat(t, j)) - log_prior[j],
                                         hmm::kEmissionLogFloor);
        }
    }
    return logs;
}

std::vector<double> mean_rows(const Matrix& gamma_hat) {
    std::vector<double> priors(gamma_hat.cols());
    double total = 0.0;
    for (std::size_t j = 0; j < gamma_hat.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < gamma_hat.rows(); ++t) {
            acc += gamma_hat(t, j);
        }
        priors[j] = std::max(acc / static_cast<double>(gamma_hat.rows()), kMinStatePrior);
        total += priors[j];
    }
    for (double& p : priors) {
        p /= total;
    }
    return priors;
}

}  // namespace

void FitConfig::validate() const {
    if (n_states < 1) {
        fail(ErrorCode::invalid_argument, "n_states must be >= 1");
    }
    if (max_iters < 1) {
        fail(ErrorCode::invalid_argument, "max_iters must be >= 1");
    }
    if (!(tol > 0.0)) {
        fail(ErrorCode::invalid_argument, "tol must be positive");
    }
    if (mixture.n_components < 1) {
        fail(ErrorCode::invalid_argument, "n_components must be >= 1");
    }
}

hmm::EmissionLogMatrix RegimeModel::emission_logs(const ObservationMatrix& obs) const {
    if (emission_kind == EmissionKind::mixture) {
        return gmm::emission_log_matrix(mixture, obs);
    }
    return scaled_likelihood_logs(ensemble.predict_proba(obs), state_priors);
}

RegimeModel fit_mixture_hmm(const ObservationMatrix& obs, const FitConfig& config) {
    check_observations(obs, config);

    RegimeModel model;
    model.emission_kind = EmissionKind::mixture;
    model.chain = initial_chain(config.n_states);
    model.mixture = gmm::init_emission(obs, config.n_states, config.mixture.n_components,
                                       config.seed);
    model.mixture.var_floor = std::max(config.mixture.var_floor, 1e-300);
    for (auto& vars : model.mixture.variances) {
        for (double& v : vars.data()) {
            v = std::max(v, model.mixture.var_floor);
        }
    }

    double prev_ll = 0.0;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        const auto logs = gmm::emission_log_matrix(model.mixture, obs);
        const auto post = hmm::posteriors(model.chain, logs);
        model.trace.log_likelihood.push_back(post.log_likelihood);
        model.trace.iterations = iter;
        if (iter > 1 && relative_improvement(post.log_likelihood, prev_ll) < config.tol) {
            model.trace.converged = true;
            break;
        }
        prev_ll = post.log_likelihood;
        if (iter == config.max_iters) {
            break;
        }
        update_chain(model.chain, post);
        model.mixture = gmm::m_step(model.mixture, obs, post.gamma);
    }
    return model;
}

RegimeModel fit_boosted_hmm(const ObservationMatrix& obs, const FitConfig& config) {
    check_observations(obs, config);

    FitConfig init_config = config;
    init_config.emission = EmissionKind::mixture;
    const RegimeModel init = fit_mixture_hmm(obs, init_config);

    RegimeModel model;
    model.emission_kind = EmissionKind::boosted;
    model.chain = init.chain;

    hmm::EmissionLogMatrix logs = gmm::emission_log_matrix(init.mixture, obs);

    RegimeModel best;
    double best_ll = -std::numeric_limits<double>::infinity();
    double prev_ll = 0.0;
    int flat_streak = 0;

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        const auto post = hmm::posteriors(model.chain, logs);
        update_chain(model.chain, post);

        gbt::BoostParams round_params = config.boosted;
        round_params.seed = config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iter);
        model.ensemble = gbt::fit_soft(obs, posterior_targets(post.gamma), round_params);

        const Matrix gamma_hat = model.ensemble.predict_proba(obs);
        model.state_priors = mean_rows(gamma_hat);
        logs = scaled_likelihood_logs(gamma_hat, model.state_priors);

        const double ll = hmm::forward(model.chain, logs).log_likelihood;
        model.trace.log_likelihood.push_back(ll);
        model.trace.iterations = iter;

        if (ll > best_ll) {
            best_ll = ll;
            best.chain = model.chain;
            best.ensemble = model.ensemble;
            best.state_priors = model.state_priors;
        }
        if (iter > 1 && relative_improvement(ll, prev_ll) < config.tol) {
            if (++flat_streak >= 3) {
                model.trace.converged = true;
                break;
            }
        } else {
            flat_streak = 0;
        }
        prev_ll = ll;
    }

    best.emission_kind = EmissionKind::boosted;
    best.trace = model.trace;
    return best;
}

hmm::PosteriorMatrix state_proba(const RegimeModel& model, const ObservationMatrix& obs) {
    return hmm::posteriors(model.chain, model.emission_logs(obs));
}

hmm::StatePath decode(const RegimeModel& model, const ObservationMatrix& obs) {
    return hmm::viterbi(model.chain, model.emission_logs(obs));
}

}  // namespace regimehmm::train
