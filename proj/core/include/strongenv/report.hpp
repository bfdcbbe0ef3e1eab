#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "strongenv/envelope.hpp"
#include "strongenv/instance.hpp"
#include "strongenv/verification.hpp"

namespace strongenv {

// FNV-1a 64 of a byte string, rendered as "fnv1a64:<16 hex digits>".
std::string fnv1a64_hex(const std::string& bytes);

// JSON run report for the `envelope` command: instance digest, U/M/A tables
// keyed by child-index node paths ("" is the root, "0.1.0" a level-3 node),
// the beta sweep, the domination violation and a report digest.  Node keys
// follow canonical id order; the digest covers everything except "timings",
// so re-running the same config reproduces it bit for bit.
std::string envelope_report_json(const Instance& instance, const EnvelopeResult& result,
                                 double elapsed_seconds);

struct InstanceChecks {
    std::string name; // e.g. "config" or "seed=7"
    std::string digest;
    std::size_t nodes = 0;
    std::vector<CheckReport> checks;
};

// JSON run report for the `verify` and `oracle` commands.
std::string verify_report_json(const std::string& command,
                               const std::vector<InstanceChecks>& instances,
                               const BetaSchedule& schedule, double elapsed_seconds);

// Extracts the "digest" field of a report produced above.
std::string report_digest_field(const std::string& report_json);

// CSV with header "beta,sup_gap,domination_violation", one row per sweep
// entry, doubles printed with round-trip precision.
void write_convergence_csv(std::ostream& out, const std::vector<BetaRow>& rows);

} // namespace strongenv
