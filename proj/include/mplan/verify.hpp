#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mplan/replanner.hpp"

namespace mplan {

struct VerifyIssue {
    int tick = -1;  // -1: header / lineage
    std::string what;
};

struct VerifyReport {
    bool lineage_ok = true;  // hashes of scenario and robot match the trace header
    bool replay_ok = true;   // every recomputed value matches the logged one
    bool safety_ok = true;   // clearance >= 0 everywhere, > threshold at arrivals
    std::vector<VerifyIssue> issues;
    int ticks = 0;
    std::string final_status;
    double min_clearance_seen = std::numeric_limits<double>::infinity();

    bool ok() const { return lineage_ok && replay_ok && safety_ok; }
};

/// Independent replay: recompute end-effector poses, obstacle snapshots and
/// clearances for every tick of the trace from the scenario and robot
/// description alone, and compare against the logged values (tolerance 1e-6).
VerifyReport verify_trace(const Trace& t, const Scenario& scenario, const RobotModel& robot);

std::string format_report(const VerifyReport& r);

}  // namespace mplan
