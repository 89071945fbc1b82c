#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rdiaudit/catalogue.hpp"
#include "rdiaudit/lang_registry.hpp"

namespace rdiaudit::rdi {

using catalogue::Source;

struct SourceValue {
  long count = 0;
  double rdi = 0.0;  // unrounded
};

struct RdiEntry {
  std::string iso639_3;
  std::string name;
  double population_millions = 0.0;
  std::map<Source, SourceValue> per_source;
  double avg_catalogue_rdi = 0.0;  // mean of the unrounded per-source values
  std::optional<SourceValue> mined;
};

/// Datasets per million speakers, unrounded. Throws NonPositivePopulation
/// when population <= 0 and PreconditionViolation for a negative count.
double compute_rdi(long count, double population_millions);

/// Mean of the unrounded LRE Map and LDC values. Throws MissingSource.
double average_catalogue_rdi(const RdiEntry& entry);

/// One entry per registry language in registry order, both catalogue sources
/// populated (zero when absent) and the average filled in.
std::vector<RdiEntry> build_entries(const lang::LanguageRegistry& registry, const catalogue::CatalogueCounts& counts);

/// Sets `mined` on each entry from per-language dataset counts.
void attach_mined_counts(std::vector<RdiEntry>& entries, const std::map<std::string, long>& mined_counts);

constexpr double kLowVisibilityThreshold = 0.1;

/// Entries whose average catalogue RDI is strictly below `threshold`, in
/// their original order.
std::vector<RdiEntry> low_visibility_filter(std::span<const RdiEntry> entries,
                                            double threshold = kLowVisibilityThreshold);

struct Bin {
  double lo = 0.0;
  double hi = 0.0;  // exclusive; may be +infinity
  long count = 0;
};

/// Histogram with the exact-zero class held apart from the half-open bins.
/// zero_count + sum(bins) + overflow_count == total; over_one_count is the
/// number of values strictly above 1.0 and overlaps the bins.
struct DistributionSummary {
  long total = 0;
  long zero_count = 0;
  std::vector<Bin> bins;
  long overflow_count = 0;  // values >= the last edge
  long over_one_count = 0;
};

/// {0, 0.1, 0.25, 0.5, 1.0, +inf}: with the zero class this gives the display
/// classes {0}, (0,0.1), [0.1,0.25), [0.25,0.5), [0.5,1.0), [1.0,inf).
std::vector<double> default_bin_edges();

/// Throws InvalidBins unless edges has >= 2 strictly increasing values
/// starting at 0.
DistributionSummary distribution_summary(std::span<const double> values, std::span<const double> bin_edges);
DistributionSummary distribution_summary(std::span<const RdiEntry> entries, std::span<const double> bin_edges);

/// Half-up, two decimals.
std::string display(double rdi);

/// `iso639_3,population_millions,lre_count,lre_rdi,ldc_count,ldc_rdi,avg_rdi[,mined_count,mined_rdi]`.
/// Mined columns are written when any entry carries mined counts.
void write_rdi_csv(std::ostream& out, std::span<const RdiEntry> entries);

}  // namespace rdiaudit::rdi
