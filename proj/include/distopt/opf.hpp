#pragma once

#include "distopt/dense_qp.hpp"
#include "distopt/power_network.hpp"
#include "distopt/problem.hpp"
#include "distopt/sqp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace distopt::opf {

struct Injections {
  Vector p;
  Vector q;
};

/// p_l = v_l sum_k v_k (G_lk cos t_lk + B_lk sin t_lk),
/// q_l = v_l sum_k v_k (G_lk sin t_lk - B_lk cos t_lk).
Injections ac_injections(const PowerNetwork& network, const Vector& v, const Vector& theta);
Injections ac_injections(const Matrix& g, const Matrix& b, const Vector& v, const Vector& theta);

/// 2N x 2N Jacobian, rows (p, q), columns (v, theta).
Matrix ac_jacobian(const PowerNetwork& network, const Vector& v, const Vector& theta);
Matrix ac_jacobian(const Matrix& g, const Matrix& b, const Vector& v, const Vector& theta);

/// p_l = sum_{k != l} B_lk (theta_l - theta_k). Rows of `b` that do not sum to
/// zero are reported in `warnings` when given.
Vector dc_power_flow(const Matrix& b, const Vector& theta, std::vector<std::string>* warnings = nullptr);
Vector dc_power_flow(const PowerNetwork& network, const Vector& theta);

enum class FlowConvention {
  /// Power leaving bus l into the series branch: S = conj(y) (v_l^2 - V_l conj(V_k)).
  kPhysical,
  /// q_lk = -v_l^2 b - v_l v_k (b cos t - g sin t), as displayed in the source text.
  kDisplay,
};

struct LineFlow {
  double p_from = 0.0;
  double q_from = 0.0;
  double p_to = 0.0;
  double q_to = 0.0;
  /// s_max - |s| at each end (infinite for unlimited lines).
  double slack_from = kInf;
  double slack_to = kInf;
};

/// Flow from l to k over a branch with series admittance g + jb.
std::pair<double, double> branch_flow(double g, double b, double vl, double vk, double theta_lk,
                                      FlowConvention convention = FlowConvention::kPhysical);

std::vector<LineFlow> line_flows(const PowerNetwork& network, const Vector& v, const Vector& theta,
                                 FlowConvention convention = FlowConvention::kPhysical);

/// Variable layout of a centralized model. Offsets of -1 mark absent blocks.
struct CentralLayout {
  Index v = -1;
  Index theta = 0;
  Index p = 0;
  Index q = -1;
  Index dim = 0;
};

struct CentralModel {
  NlpProblem nlp;
  CentralLayout layout;
  Vector initial;
};

/// AC-OPF over (v, theta, p, q) with the power flow and v_1 = 1, theta_1 = 0 as
/// equalities; generator and voltage bounds and |s_lk|^2 <= s_max^2 at both
/// line ends as inequalities.
CentralModel build_centralized_acopf(const PowerNetwork& network);

struct DcModel {
  CentralModel model;
  /// Cost 0.5 x'Hx + c'x + constant; equalities E x = f; inequalities I x <= u.
  DenseQp qp;
  double constant = 0.0;
};

/// DC-OPF over (theta, p): p^g - p^d = -B theta (so F = u - d + B theta = 0),
/// theta_1 = 0, generator bounds and |B_lk (theta_l - theta_k)| <= p_max.
DcModel build_dcopf(const PowerNetwork& network);

struct AuxNode {
  Index line = 0;
  Index region = 0;
  /// Original bus at this end of the cut line.
  Index bus = 0;
};

struct Partition {
  Index regions = 0;
  std::vector<Index> region_of_bus;
  std::vector<Index> cut_lines;
  /// Two per cut line, in cut-line order: first the side of `from`, then `to`.
  std::vector<AuxNode> aux;
  /// Consensus pairs as indices into `aux`.
  std::vector<std::pair<Index, Index>> pairs;
  std::vector<std::vector<Index>> buses_of_region;
};

/// `assignment[l]` is the 0-based region of bus l. Every region must own a bus.
Partition partition_network(const PowerNetwork& network, const std::vector<Index>& assignment);

enum class FlowModel { kAc, kDc };

/// Layout of one region's variable vector.
///   AC: [v(nodes), theta(nodes), p(gens), q(gens), p_aux, q_aux, extra]
///   DC: [theta(nodes), p(gens), p_aux, extra]
/// Nodes are the region's buses in increasing order followed by its aux nodes.
struct RegionLayout {
  FlowModel model = FlowModel::kAc;
  std::vector<Index> buses;
  std::vector<Index> aux;        // indices into Partition::aux
  std::vector<Index> generators;
  Index nodes = 0;
  Index v = -1;
  Index theta = 0;
  Index p = 0;
  Index q = -1;
  Index p_aux = 0;
  Index q_aux = -1;
  Index extra = 0;
  Index dim = 0;
};

struct DistributedModel {
  PartiallySeparableProblem problem;
  Partition partition;
  std::vector<RegionLayout> layouts;
  /// Flat start: v = 1, theta = 0, injections 0.
  Vector initial;
  FlowModel model = FlowModel::kAc;
};

/// Each region becomes a subsystem whose power-flow equalities appear as
/// pairs F <= 0, -F <= 0. A cut line of admittance y becomes two half-lines of
/// admittance 2y ending in auxiliary nodes; the coupling rows per cut line are
/// theta_a - theta_b, v_a - v_b, p_a + p_b, q_a + q_b (DC: theta and p only).
/// Only the region holding bus 1 pins v_1 = 1 and theta_1 = 0.
DistributedModel build_distributed_acopf(const PowerNetwork& network, const Partition& partition);
DistributedModel build_distributed_dcopf(const PowerNetwork& network, const Partition& partition);

struct OperatingPoint {
  Vector v;
  Vector theta;
  Vector p;
  Vector q;
};

/// Bus and generator values of a distributed solution (x of length total_dim).
OperatingPoint merge_solution(const DistributedModel& model, const Vector& x);
OperatingPoint extract_central(const CentralModel& model, const Vector& x);

/// Largest violation of the AC-OPF constraints (power flow, bounds, line
/// limits, reference) at the point.
double acopf_violation(const PowerNetwork& network, const OperatingPoint& point);

double generation_cost(const PowerNetwork& network, const Vector& p);

struct MultiStageSpec {
  int stages = 1;
  /// Demand multiplier per stage; empty means 1 throughout.
  std::vector<double> demand_scale;
  /// Ramp bounds on p(k+1) - p(k) per generator.
  std::vector<double> ramp_down;
  std::vector<double> ramp_up;
};

/// One subsystem per stage, each a full AC-OPF with stage demand. Stage k >= 1
/// also carries du(k-1) = (dp, dq) with cost ||du||^2 and ramp bounds on dp;
/// coupling rows u(k) - u(k-1) - du(k-1) = 0. A single stage has no coupling.
DistributedModel build_multistage_acopf(const PowerNetwork& network, const MultiStageSpec& spec);

/// Chain 1-2-3-4 with generators at buses 1 and 4. Lossy lines (r = 0.01,
/// x = 0.1) unless `lossless`.
PowerNetwork four_bus_chain(bool lossless = false);

/// The 5-bus PJM test system in per unit (100 MVA base) with small quadratic
/// cost terms.
PowerNetwork pjm_five_bus();

/// Connected random network (ring plus chords) for derivative tests.
PowerNetwork random_network(Index buses, std::uint64_t seed, bool lossless = false);

}  // namespace distopt::opf
