#pragma once

#include <string>
#include <vector>

namespace mec::text {

// Canonical caption form used for every string comparison in the toolkit:
// lowercase ASCII, internal whitespace collapsed to single spaces, ends trimmed.
std::string normalize_caption(const std::string& raw);

// Lowercases and drops every non-alphanumeric character; used to compare role
// labels such as "Arg0" / "ARG0" / "ArgM-Loc" without coupling to one lexicon.
std::string normalize_role_label(const std::string& raw);

// True for the coreference-eligible roles: Arg0, Arg1, Arg2, Location/Scene.
bool is_coref_role(const std::string& role_label);

// Caption tokenizer for n-gram metrics: lowercase, strip punctuation, split on
// whitespace.
std::vector<std::string> tokenize(const std::string& caption);

}  // namespace mec::text
