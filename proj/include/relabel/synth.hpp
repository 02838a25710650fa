#pragma once

#include <array>
#include <string>

#include "relabel/corpus.hpp"
#include "relabel/schema.hpp"

namespace relabel::synth {

struct Template {
  const char* pattern;  // contains the placeholder "[label]"
  schema::Certainty certainty;
};

// The five generation templates, fixed in this order; the index is part of
// the emitted report ids.
const std::array<Template, 5>& templates();

// Renders a template with a surface string in place of "[label]".
std::string render(const Template& t, const std::string& variant);

// One sentence per (label, variant, template), in schema order then variant
// order then template order. Each sentence is annotated with exactly its own
// label at the template's certainty; report_id is
// "synthetic/<label-id>/<variant>/<template-index>".
corpus::Dataset generate_synthetic(const schema::LabelSchema& sch);

}  // namespace relabel::synth
