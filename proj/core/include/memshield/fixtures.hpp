#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Committed fixture data: word pools, templates, probes and rulesets. All of
// it is plain text so it can be swapped out for user-supplied files.
namespace memshield::fixtures {

/// Synonym classes; the first word of each class is its representative.
const std::vector<std::vector<std::string>>& synonym_classes();

struct CategoryFixture {
  std::string name;
  std::vector<std::string> templates;
};

/// The seven benign memory categories, in canonical order.
const std::vector<CategoryFixture>& categories();

/// Slot pools referenced as {name} from templates.
const std::vector<std::string>& pool(const std::string& name);

/// Index of the default victim category ("configuration settings").
std::size_t victim_category_index();

const std::vector<std::string>& victim_query_templates();
const std::vector<std::string>& benign_query_templates();

/// Candidate tokens for the greedy trigger search.
const std::vector<std::string>& trigger_vocabulary();

const std::vector<std::string>& agentpoison_payloads();
const std::string& minja_directive();
const std::vector<std::string>& injecmem_anchor_templates();
const std::vector<std::string>& injecmem_payloads();

/// 16 proactive probes, two per configuration subtopic.
const std::vector<std::string>& proactive_probes();

/// Default substring ruleset for the validation defense.
const std::vector<std::string>& validation_patterns();

/// Interaction notes prepended when an infected agent re-stores a poison.
const std::vector<std::string>& restore_notes();

}  // namespace memshield::fixtures
