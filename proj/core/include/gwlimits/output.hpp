#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "gwlimits/estimators.hpp"
#include "gwlimits/process_model.hpp"
#include "gwlimits/verification.hpp"

namespace gwlimits {

/// Shortest round-trip decimal form, so identical doubles print identically.
std::string format_double(double x);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// "# config_hash=<hash> master_seed=<seed>\n"
std::string header_comment(std::string_view config_hash, std::uint64_t master_seed);

std::string report_to_json(const VerificationReport& report, std::string_view config_hash);

/// Grid rows: t (or c_id,K), theory, empirical, |diff|. thm4 reports
/// get one row per N instead.
void write_report_csv(std::ostream& out, const VerificationReport& report);

std::string estimate_to_json(const EstimateReport& report, const ProcessSpec* spec, const EigenData* eigen,
                             std::string_view config_hash, std::uint64_t master_seed);

/// name,estimate,truth,abs_error (truth and error empty when unknown).
void write_estimate_csv(std::ostream& out, const EstimateReport& report, const ProcessSpec* spec,
                        const EigenData* eigen);

/// Human-readable V, rho, v, u, H(u), Lambda.
void print_eigen_summary(std::ostream& out, const ProcessSpec& spec, const EigenData& eigen);

}  // namespace gwlimits
