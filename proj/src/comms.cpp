#include "distopt/comms.hpp"

#include "distopt/error.hpp"

#include <ostream>

namespace distopt {

const char* to_string(Variant variant) {
  switch (variant) {
    case Variant::kAdmm: return "admm";
    case Variant::kAladin: return "aladin";
    case Variant::kAladinBfgs: return "aladin_bfgs";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "admm") return Variant::kAdmm;
  if (name == "aladin") return Variant::kAladin;
  if (name == "aladin_bfgs") return Variant::kAladinBfgs;
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm variant '" + name + "'");
}

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kLocalSolution: return "local_solution";
    case MessageKind::kJacobianInfo: return "jacobian_info";
    case MessageKind::kHessianInfo: return "hessian_info";
    case MessageKind::kQpResult: return "qp_result";
    case MessageKind::kDualUpdate: return "dual_update";
  }
  return "unknown";
}

Index packed_symmetric_size(Index n) { return n * (n + 1) / 2; }

Index jacobian_block_size(Index n) { return (n * n + 1) / 2; }

Volume expected_volume(Variant variant, const std::vector<Index>& dims) {
  Volume v;
  for (Index n : dims) {
    if (n <= 0) throw Error(ErrorCode::kInvalidArgument, "subsystem dimensions must be positive");
    switch (variant) {
      case Variant::kAdmm:
        v.up += n;
        v.down += n;
        break;
      case Variant::kAladin:
        v.up += (n * (2 * n + 3) + 1) / 2;
        v.down += 2 * n;
        break;
      case Variant::kAladinBfgs:
        v.up += (n * (n + 4) + 1) / 2;
        v.down += 2 * n;
        break;
    }
  }
  return v;
}

void CommLedger::record(const Message& message) {
  if (message.scalar_count < 0) throw Error(ErrorCode::kInvalidArgument, "negative message size");
  messages_.push_back(message);
  Volume& t = totals_[message.iteration];
  if (message.receiver == kCentralEntity) {
    t.up += message.scalar_count;
  } else {
    t.down += message.scalar_count;
  }
}

void CommLedger::mark_terminal(int iteration) {
  terminal_.insert(iteration);
  totals_[iteration];
}

Volume CommLedger::totals(int iteration) const {
  const auto it = totals_.find(iteration);
  return it == totals_.end() ? Volume{} : it->second;
}

std::vector<int> CommLedger::iterations() const {
  std::vector<int> out;
  for (const auto& entry : totals_) out.push_back(entry.first);
  return out;
}

void CommLedger::clear() {
  messages_.clear();
  totals_.clear();
  terminal_.clear();
}

AuditReport audit(const CommLedger& ledger, Variant variant, const std::vector<Index>& dims) {
  const Volume expected = expected_volume(variant, dims);
  AuditReport report;
  for (int it : ledger.iterations()) {
    const Volume actual = ledger.totals(it);
    const Index down_expected = ledger.is_terminal(it) ? 0 : expected.down;
    const AuditRow up{it, "up", actual.up, expected.up, actual.up - expected.up};
    const AuditRow down{it, "down", actual.down, down_expected, actual.down - down_expected};
    for (const AuditRow& row : {up, down}) {
      report.rows.push_back(row);
      if (row.deviation != 0) report.deviations.push_back(row);
    }
  }
  return report;
}

void write_audit_csv(std::ostream& out, const AuditReport& report) {
  out << "iteration,direction,scalars,expected,deviation\n";
  for (const AuditRow& r : report.rows) {
    out << r.iteration << ',' << r.direction << ',' << r.scalars << ',' << r.expected << ',' << r.deviation
        << '\n';
  }
}

}  // namespace distopt
