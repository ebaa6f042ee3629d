#include "mec/text.hpp"

#include <cctype>

namespace mec::text {

std::string normalize_caption(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char ch : raw) {
    if (std::isspace(ch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

std::string normalize_role_label(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char ch : raw) {
    if (std::isalnum(ch)) out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

bool is_coref_role(const std::string& role_label) {
  const std::string label = normalize_role_label(role_label);
  // Arg0/Arg1/Arg2 plus the location/scene spellings seen across VidSitu-style
  // annotations (ArgM-Loc, AScn, Scene, Location).
  return label == "arg0" || label == "arg1" || label == "arg2" ||
         label == "argmloc" || label == "argloc" || label == "ascn" ||
         label == "argmscn" || label == "scene" || label == "location" ||
         label == "loc";
}

std::vector<std::string> tokenize(const std::string& caption) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : caption) {
    if (std::isspace(ch)) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
      continue;
    }
    if (std::ispunct(ch)) continue;
    current.push_back(static_cast<char>(std::tolower(ch)));
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

}  // namespace mec::text
