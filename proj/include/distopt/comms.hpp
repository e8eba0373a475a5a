#pragma once

#include "distopt/types.hpp"

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace distopt {

enum class Variant { kAdmm, kAladin, kAladinBfgs };

const char* to_string(Variant variant);
Variant parse_variant(const std::string& name);

enum class MessageKind { kLocalSolution, kJacobianInfo, kHessianInfo, kQpResult, kDualUpdate };

const char* to_string(MessageKind kind);

/// Agent id of the central entity; subsystems use their index.
inline constexpr int kCentralEntity = -1;

struct Message {
  int sender = 0;
  int receiver = kCentralEntity;
  MessageKind kind = MessageKind::kLocalSolution;
  Index scalar_count = 0;
  int iteration = 0;
};

struct Volume {
  Index up = 0;
  Index down = 0;
};

/// Per-iteration traffic of a full (non-terminal) iteration:
///   admm:        up n,               down n
///   aladin:      up n(2n+3)/2,       down 2n
///   aladin_bfgs: up n(n+4)/2,        down 2n
/// summed over subsystems; odd n rounds each subsystem's uplink up.
Volume expected_volume(Variant variant, const std::vector<Index>& dims);

/// Payload sizes of the individual uplink messages. A symmetric Hessian travels
/// packed (n(n+1)/2 scalars); gradient and active-row information travel in a
/// fixed block of ceil(n^2/2) scalars regardless of how many rows are active.
Index packed_symmetric_size(Index n);
Index jacobian_block_size(Index n);

class CommLedger {
 public:
  void record(const Message& message);
  /// Marks an iteration where the algorithm stopped before the downlink.
  void mark_terminal(int iteration);

  const std::vector<Message>& messages() const { return messages_; }
  bool is_terminal(int iteration) const { return terminal_.count(iteration) > 0; }
  Volume totals(int iteration) const;
  std::vector<int> iterations() const;
  void clear();

 private:
  std::vector<Message> messages_;
  std::map<int, Volume> totals_;
  std::set<int> terminal_;
};

struct AuditRow {
  int iteration = 0;
  std::string direction;
  Index scalars = 0;
  Index expected = 0;
  Index deviation = 0;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  std::vector<AuditRow> deviations;
  bool ok() const { return deviations.empty(); }
};

/// Compares every recorded iteration against the expected volume. Terminal
/// iterations expect no downlink.
AuditReport audit(const CommLedger& ledger, Variant variant, const std::vector<Index>& dims);

/// CSV with columns iteration,direction,scalars,expected,deviation.
void write_audit_csv(std::ostream& out, const AuditReport& report);

}  // namespace distopt
