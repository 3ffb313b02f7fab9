#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rehearsal/domain.hpp"
#include "rehearsal/judge.hpp"

namespace rehearsal {

/// Raw corpus field names; dumps vary, so the mapping is configurable.
struct FieldMap {
  std::string reviewer = "reviewerID";
  std::string product = "asin";
  std::string text = "reviewText";
  std::string category = "category";
};

struct RawReview {
  std::string user_id;
  std::string product_id;
  std::string text;
  Category category = Category::Clothing;
};

struct IngestStats {
  std::size_t lines_read = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Reads line-delimited JSON reviews; malformed lines are skipped with a
/// warning, never fatal.
std::vector<RawReview> ingest_reviews(const std::filesystem::path& path,
                                      const FieldMap& fields,
                                      IngestStats* stats = nullptr);

/// Builds candidate samples: each user review of a product becomes the
/// held-out personalized review; the user's other same-category reviews
/// are the history; other users' reviews of that product are the product
/// set. Candidates without any other-user product review are dropped.
std::vector<Sample> assemble_candidates(const std::vector<RawReview>& reviews);

/// Round 1: strict history-count and history-length bounds.
std::vector<Sample> filter_round1(const std::vector<Sample>& candidates);

/// Round 2: personalized review must reach a combined ROUGE-{1,2,L} F1 of
/// at least 0.45 against history followed by product reviews.
std::vector<Sample> filter_round2(const std::vector<Sample>& survivors);

inline constexpr double kRougeSumThreshold = 0.45;

/// Tier rule on the 1-5 judge scale: all relevant scores above 4 is
/// high/high; all at or below 3 is low/low; high history coverage with
/// low product scores is the deliberately hard personalization tier.
Tier classify_tier(double product_ac, double product_sc, double history_ac);

struct TierTargets {
  int high = 0;
  int low = 0;
  int hhpl = 0;
};

using TierCounts = std::map<Category, TierTargets>;

/// Published per-category targets.
TierCounts default_tier_counts();

struct TierSampleResult {
  std::vector<Sample> selected;  // tier field set
  std::map<std::string, std::map<std::string, int>> counts;  // category -> tier -> n
  std::vector<std::string> shortfalls;
  std::vector<std::string> excluded;  // unjudgeable or between tiers
};

/// Scores every survivor with the judge (product AC/SC, history AC only),
/// classifies, then draws: high/high at random (seeded), the scarce tiers
/// wholesale up to their caps in survivor order.
TierSampleResult tier_sample(const std::vector<Sample>& survivors,
                             const Judge& judge, const TierCounts& counts,
                             std::uint64_t seed);

}  // namespace rehearsal
