// Copyright 2026 The pmmh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "pmmh/core.hpp"
#include "pmmh/estimators.hpp"
#include "pmmh/trace.hpp"

namespace pmmh {

/// State of a chain that recycles its auxiliary block between sweeps. The
/// block is always weighed and has positive estimated mass; kernels enforce
/// this instead of silently repairing it. log_target_theta caches the exact
/// unnormalized marginal when the target can evaluate it (diagnostics
/// only, never used in ratios).
struct PmState {
  ParameterPoint theta;
  AuxBlock block;
  std::optional<double> log_target_theta;
};

/// Outcome of one kernel application. state is the post-move state; on
/// rejection it compares equal to the input (the recycled block is carried
/// over unchanged). block_draws counts candidate blocks drawn by the move.
template <class State>
struct StepOutcome {
  State state;
  bool accepted = false;
  double log_ratio = kNegInf;
  ParameterPoint proposed_theta;
  bool null_move = false;
  std::uint64_t block_draws = 0;
};

/// The one accept/reject routine every kernel uses. Consumes exactly one
/// uniform and accepts iff log(u) < log_ratio, so -inf ratios reject with
/// certainty and nonnegative ratios accept with certainty. A NaN ratio is
/// a bug in the caller.
inline bool accept(double log_ratio, RngStream& rng) {
  if (std::isnan(log_ratio)) {
    throw ContractViolation("accept: log ratio is NaN");
  }
  return std::log(rng.uniform01()) < log_ratio;
}

/// log q(candidate -> current) - log q(current -> candidate). The forward
/// density of a candidate the proposal itself produced must be positive; a
/// zero reverse density makes the move unacceptable (-inf).
template <ThetaProposal P>
double proposal_log_ratio(const P& proposal, const ParameterPoint& current,
                          const ParameterPoint& candidate) {
  const double fwd = proposal.log_density(current, candidate);
  const double rev = proposal.log_density(candidate, current);
  require_log_value(rev, "proposal_log_ratio: reverse density");
  require_log_value(fwd, "proposal_log_ratio: forward density");
  if (fwd == kNegInf) {
    throw ContractViolation(
        "proposal_log_ratio: proposal produced a candidate its own density "
        "calls unreachable");
  }
  return rev == kNegInf ? kNegInf : rev - fwd;
}

namespace detail {

template <class State>
StepOutcome<State> null_outcome(const State& state,
                                const ParameterPoint& theta) {
  StepOutcome<State> out;
  out.state = state;
  out.proposed_theta = theta;
  out.null_move = true;
  out.log_ratio = kNegInf;
  return out;
}

inline void require_live_block(const AuxBlock& block, const char* kernel) {
  if (!block.weighed()) {
    throw ContractViolation(std::string(kernel) +
                            ": state block has not been weighed");
  }
  if (block.log_gamma == kNegInf) {
    throw ContractViolation(std::string(kernel) +
                            ": state block has zero estimated mass, the "
                            "chain was started illegally");
  }
}

}  // namespace detail

/// Metropolis-Hastings directly on the exact marginal; the reference
/// kernel the pseudo-marginal chains are compared against.
template <MarginalTarget Target, ThetaProposal Proposal>
StepOutcome<ParameterPoint> marginal_step(const ParameterPoint& theta,
                                          const Target& target,
                                          const Proposal& proposal,
                                          ChainRng& rng) {
  const ParameterPoint candidate = proposal.sample(theta, rng.theta);
  if (candidate == theta) return detail::null_outcome(theta, candidate);

  const double lm_candidate = target.log_marginal(candidate);
  const double lm_current = target.log_marginal(theta);
  require_log_value(lm_candidate, "marginal_step: candidate marginal");
  require_log_value(lm_current, "marginal_step: current marginal");
  const double pr = proposal_log_ratio(proposal, theta, candidate);

  double log_ratio;
  if (lm_candidate == kNegInf || pr == kNegInf) {
    log_ratio = kNegInf;
  } else if (lm_current == kNegInf) {
    log_ratio = kPosInf;  // escaping a zero-mass starting point
  } else {
    log_ratio = lm_candidate + pr - lm_current;
  }

  StepOutcome<ParameterPoint> out;
  out.proposed_theta = candidate;
  out.log_ratio = log_ratio;
  out.accepted = accept(log_ratio, rng.accept);
  out.state = out.accepted ? candidate : theta;
  return out;
}

/// Pseudo-marginal step with block recycling: one fresh block is weighed
/// for the candidate, the current side reuses the stored value. A null
/// proposal (candidate == current point) draws no block and counts as a
/// rejected sweep.
template <TargetModel Target, ThetaProposal Proposal, BlockScheme Scheme>
StepOutcome<PmState> gimh_step(const PmState& state, const Target& target,
                               const Proposal& proposal, const Scheme& scheme,
                               ChainRng& rng) {
  detail::require_live_block(state.block, "gimh_step");
  const ParameterPoint candidate = proposal.sample(state.theta, rng.theta);
  if (candidate == state.theta) {
    return detail::null_outcome(state, candidate);
  }

  AuxBlock fresh = scheme.sample_block(candidate, rng.block);
  fresh.log_gamma = scheme.log_gamma(candidate, fresh).log_gamma;
  const double pr = proposal_log_ratio(proposal, state.theta, candidate);

  const double log_ratio =
      (fresh.log_gamma == kNegInf || pr == kNegInf)
          ? kNegInf
          : fresh.log_gamma - state.block.log_gamma + pr;

  StepOutcome<PmState> out;
  out.proposed_theta = candidate;
  out.log_ratio = log_ratio;
  out.block_draws = 1;
  out.accepted = accept(log_ratio, rng.accept);
  if (out.accepted) {
    out.state.theta = candidate;
    out.state.block = std::move(fresh);
    if constexpr (MarginalTarget<Target>) {
      out.state.log_target_theta = target.log_marginal(candidate);
    }
  } else {
    out.state = state;
  }
  return out;
}

/// Noisy variant: both sides of the ratio are weighed on freshly drawn
/// blocks every step, so no block persists and the invariant law is only
/// approximately the marginal. A tie of two zero-mass blocks rejects.
template <TargetModel Target, ThetaProposal Proposal, BlockScheme Scheme>
StepOutcome<ParameterPoint> mcwm_step(const ParameterPoint& theta,
                                      const Target& target,
                                      const Proposal& proposal,
                                      const Scheme& scheme, ChainRng& rng) {
  (void)target;
  const ParameterPoint candidate = proposal.sample(theta, rng.theta);
  if (candidate == theta) return detail::null_outcome(theta, candidate);

  const AuxBlock current_block = scheme.sample_block(theta, rng.block);
  const double lg_current = scheme.log_gamma(theta, current_block).log_gamma;
  const AuxBlock candidate_block = scheme.sample_block(candidate, rng.block);
  const double lg_candidate =
      scheme.log_gamma(candidate, candidate_block).log_gamma;
  const double pr = proposal_log_ratio(proposal, theta, candidate);

  double log_ratio;
  if (lg_candidate == kNegInf || pr == kNegInf) {
    log_ratio = kNegInf;
  } else if (lg_current == kNegInf) {
    log_ratio = kPosInf;
  } else {
    log_ratio = lg_candidate - lg_current + pr;
  }

  StepOutcome<ParameterPoint> out;
  out.proposed_theta = candidate;
  out.log_ratio = log_ratio;
  out.block_draws = 2;
  out.accepted = accept(log_ratio, rng.accept);
  out.state = out.accepted ? candidate : theta;
  return out;
}

/// Independence move on the block alone: propose a fresh block at the
/// current point, accept with probability min(1, gamma_fresh / gamma_cur).
/// Leaves the recycled-block chain's invariant law intact and restores
/// block diversity after long holds.
template <BlockScheme Scheme>
StepOutcome<PmState> refresh_aux(const PmState& state, const Scheme& scheme,
                                 ChainRng& rng) {
  detail::require_live_block(state.block, "refresh_aux");
  AuxBlock fresh = scheme.sample_block(state.theta, rng.block);
  fresh.log_gamma = scheme.log_gamma(state.theta, fresh).log_gamma;

  const double log_ratio = fresh.log_gamma == kNegInf
                               ? kNegInf
                               : fresh.log_gamma - state.block.log_gamma;

  StepOutcome<PmState> out;
  out.proposed_theta = state.theta;
  out.log_ratio = log_ratio;
  out.block_draws = 1;
  out.accepted = accept(log_ratio, rng.accept);
  out.state = state;
  if (out.accepted) out.state.block = std::move(fresh);
  return out;
}

/// Single-coordinate Gaussian random-walk update of the auxiliary draw,
/// valid only for block size 1 where the recycled-block chain's joint
/// invariant is the exact joint density. The block's stored value is
/// recomputed on acceptance because the block itself changes.
template <TargetModel Target, BlockScheme Scheme>
StepOutcome<PmState> rw_block_step(const PmState& state, const Target& target,
                                   const Scheme& scheme, double step_sd,
                                   ChainRng& rng) {
  detail::require_live_block(state.block, "rw_block_step");
  if (scheme.block_size() != 1) {
    throw ContractViolation("rw_block_step: block size must be 1");
  }
  const Vector& z = state.block.draws[0];
  if (z.size() == 0) return detail::null_outcome(state, state.theta);

  const auto coord =
      static_cast<Eigen::Index>(rng.block.uniform_index(z.size()));
  Vector z_new = z;
  z_new[coord] += step_sd * rng.block.normal();

  const double lj_current = target.log_joint(state.theta, z);
  require_log_value(lj_current, "rw_block_step: current joint");
  if (lj_current == kNegInf) {
    throw ContractViolation("rw_block_step: current draw has zero joint");
  }
  const double lj_new = target.log_joint(state.theta, z_new);
  require_log_value(lj_new, "rw_block_step: candidate joint");
  const double log_ratio =
      lj_new == kNegInf ? kNegInf : lj_new - lj_current;

  StepOutcome<PmState> out;
  out.proposed_theta = state.theta;
  out.log_ratio = log_ratio;
  out.accepted = accept(log_ratio, rng.accept);
  out.state = state;
  if (out.accepted) {
    out.state.block.draws[0] = std::move(z_new);
    out.state.block.log_gamma =
        scheme.log_gamma(state.theta, out.state.block).log_gamma;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chain drivers.

/// Extra moves appended to every sweep of a recycled-block chain.
struct SweepSchedule {
  std::uint64_t refresh_moves = 0;
  std::uint64_t rw_updates = 0;
  double rw_step_sd = 0.0;
};

inline constexpr int kInitBlockRetryLimit = 1000;

/// Draws initial blocks at theta until one has positive estimated mass.
template <BlockScheme Scheme>
AuxBlock draw_initial_block(const Scheme& scheme, const ParameterPoint& theta,
                            RngStream& rng) {
  for (int attempt = 0; attempt < kInitBlockRetryLimit; ++attempt) {
    AuxBlock block = scheme.sample_block(theta, rng);
    block.log_gamma = scheme.log_gamma(theta, block).log_gamma;
    if (block.log_gamma > kNegInf) return block;
  }
  throw InitializationError(
      "no initial block with positive estimated mass after " +
      std::to_string(kInitBlockRetryLimit) + " attempts");
}

template <TargetModel Target, ThetaProposal Proposal, BlockScheme Scheme>
ChainTrace run_gimh_chain(const Target& target, const Proposal& proposal,
                          const Scheme& scheme,
                          const ParameterPoint& init_theta,
                          std::uint64_t sweeps, const SweepSchedule& schedule,
                          ChainRng& rng) {
  PmState state;
  state.theta = init_theta;
  state.block = draw_initial_block(scheme, init_theta, rng.init);
  if constexpr (MarginalTarget<Target>) {
    state.log_target_theta = target.log_marginal(init_theta);
  }

  ChainTrace trace;
  trace.records.reserve(sweeps);
  for (std::uint64_t sweep = 1; sweep <= sweeps; ++sweep) {
    auto out = gimh_step(state, target, proposal, scheme, rng);
    state = std::move(out.state);
    trace.block_draws += out.block_draws;

    for (std::uint64_t j = 0; j < schedule.refresh_moves; ++j) {
      auto r = refresh_aux(state, scheme, rng);
      state = std::move(r.state);
      trace.block_draws += r.block_draws;
      ++trace.refresh_attempts;
      trace.refresh_accepts += r.accepted ? 1 : 0;
    }
    for (std::uint64_t j = 0; j < schedule.rw_updates; ++j) {
      auto r = rw_block_step(state, target, scheme, schedule.rw_step_sd, rng);
      state = std::move(r.state);
      ++trace.rw_attempts;
      trace.rw_accepts += r.accepted ? 1 : 0;
    }

    trace.records.push_back({sweep, state.theta, out.accepted, out.log_ratio,
                             state.block.log_gamma});
  }
  return trace;
}

template <TargetModel Target, ThetaProposal Proposal, BlockScheme Scheme>
ChainTrace run_mcwm_chain(const Target& target, const Proposal& proposal,
                          const Scheme& scheme,
                          const ParameterPoint& init_theta,
                          std::uint64_t sweeps, ChainRng& rng) {
  ParameterPoint theta = init_theta;
  ChainTrace trace;
  trace.records.reserve(sweeps);
  for (std::uint64_t sweep = 1; sweep <= sweeps; ++sweep) {
    auto out = mcwm_step(theta, target, proposal, scheme, rng);
    theta = std::move(out.state);
    trace.block_draws += out.block_draws;
    trace.records.push_back({sweep, theta, out.accepted, out.log_ratio, kNaN});
  }
  return trace;
}

template <MarginalTarget Target, ThetaProposal Proposal>
ChainTrace run_marginal_chain(const Target& target, const Proposal& proposal,
                              const ParameterPoint& init_theta,
                              std::uint64_t sweeps, ChainRng& rng) {
  ParameterPoint theta = init_theta;
  ChainTrace trace;
  trace.records.reserve(sweeps);
  for (std::uint64_t sweep = 1; sweep <= sweeps; ++sweep) {
    auto out = marginal_step(theta, target, proposal, rng);
    theta = std::move(out.state);
    trace.records.push_back({sweep, theta, out.accepted, out.log_ratio, kNaN});
  }
  return trace;
}

}  // namespace pmmh
