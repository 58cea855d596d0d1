#pragma once

// Dictionary ingestion, definition tokenization and the closed vocabulary.
//
// Every base word is described by the first definition listed for it in the
// dictionary. That definition is tokenized, stopwords are removed and the
// surviving terms are truncated or padded to a fixed length of 19 so that a
// word always maps to the same number of images downstream.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "defvec/error.hpp"
#include "defvec/io.hpp"

namespace defvec {

inline constexpr std::size_t kDefinitionLength = 19;
inline constexpr std::string_view kPad = "<PAD>";

/// Headword -> ordered definitions (file order).
struct Dictionary {
  std::map<std::string, std::vector<std::string>> entries;

  bool contains(std::string_view word) const { return entries.find(std::string(word)) != entries.end(); }
};

struct StopwordPolicy {
  std::unordered_set<std::string> dropped;

  bool drops(std::string_view token) const { return dropped.count(io::to_lower(token)) != 0; }
};

/// Copulas, articles and common prepositions. Conjunctions, question words,
/// emphatics and punctuation are deliberately absent: they carry tone.
inline StopwordPolicy default_stopwords() {
  return StopwordPolicy{{"a",  "an", "the", "is", "are", "was", "were", "be", "been",
                         "being", "also", "of", "to", "in", "on", "at", "by", "for",
                         "with", "as", "it", "its", "this", "that", "or"}};
}

struct DefinitionEntry {
  std::string word;
  std::array<std::string, kDefinitionLength> terms;
  std::size_t real_term_count = 0;

  bool is_pad(std::size_t i) const { return i >= real_term_count; }
};

class Vocabulary {
 public:
  const std::vector<std::string>& base_words() const { return base_words_; }
  const std::vector<std::string>& all_words() const { return all_words_; }
  bool contains(std::string_view word) const { return all_index_.count(std::string(word)) != 0; }

  const DefinitionEntry& entry(std::string_view word) const {
    const auto it = entries_.find(std::string(word));
    if (it == entries_.end()) throw Error("no definition entry for '" + std::string(word) + "'");
    return it->second;
  }

  /// all_words keeps base words ahead of definition terms: a term that later
  /// turns out to be a base word moves into the base section.
  void add_entry(DefinitionEntry entry) {
    if (!all_index_.insert(entry.word).second) {
      all_words_.erase(std::find(all_words_.begin() + static_cast<std::ptrdiff_t>(base_words_.size()),
                                 all_words_.end(), entry.word));
    }
    all_words_.insert(all_words_.begin() + static_cast<std::ptrdiff_t>(base_words_.size()), entry.word);
    base_words_.push_back(entry.word);
    for (std::size_t i = 0; i < entry.real_term_count; ++i) add_word(entry.terms[i]);
    std::string key = entry.word;
    entries_.emplace(std::move(key), std::move(entry));
  }

 private:
  void add_word(const std::string& word) {
    if (all_index_.insert(word).second) all_words_.push_back(word);
  }

  std::vector<std::string> base_words_;
  std::vector<std::string> all_words_;
  std::unordered_set<std::string> all_index_;
  std::unordered_map<std::string, DefinitionEntry> entries_;
};

struct VocabularyBuild {
  Vocabulary vocabulary;
  std::vector<std::string> skipped;  // base words with no dictionary entry
};

namespace detail {

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0 && (c & 0x80) == 0; }

inline bool contains_pad(std::string_view text) { return io::to_lower(text).find("<pad>") != std::string::npos; }

}  // namespace detail

inline Dictionary read_dictionary(std::istream& in, const std::string& name = "<stream>") {
  Dictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (io::read_line(in, line)) {
    ++line_no;
    if (io::trim(line).empty() || line.front() == '#') continue;
    const auto where = " at line " + std::to_string(line_no) + " of " + name;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("missing TAB separator" + where);
    const auto headword = io::trim(std::string_view(line).substr(0, tab));
    const auto definition = io::trim(std::string_view(line).substr(tab + 1));
    if (headword.empty()) throw ValidationError("empty headword" + where);
    if (definition.empty()) throw ValidationError("empty definition" + where);
    for (char c : headword) {
      if (detail::is_ascii_space(c)) throw ValidationError("whitespace inside headword" + where);
    }
    if (detail::contains_pad(headword) || detail::contains_pad(definition)) {
      throw ValidationError("reserved token <PAD>" + where);
    }
    dict.entries[io::to_lower(headword)].emplace_back(definition);
  }
  return dict;
}

inline Dictionary load_dictionary(const std::string& path) {
  auto in = io::open_input(path);
  return read_dictionary(in, path);
}

/// One token per line; blank lines ignored; tokens lowercased; duplicates
/// keep their first position.
inline std::vector<std::string> read_token_list(std::istream& in, const std::string& name = "<stream>") {
  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (io::read_line(in, line)) {
    ++line_no;
    const auto token = io::trim(line);
    if (token.empty()) continue;
    for (char c : token) {
      if (detail::is_ascii_space(c)) {
        throw ValidationError("whitespace inside token at line " + std::to_string(line_no) + " of " + name);
      }
    }
    if (detail::contains_pad(token)) {
      throw ValidationError("reserved token <PAD> at line " + std::to_string(line_no) + " of " + name);
    }
    auto lowered = io::to_lower(token);
    if (seen.insert(lowered).second) tokens.push_back(std::move(lowered));
  }
  return tokens;
}

inline std::vector<std::string> load_token_list(const std::string& path) {
  auto in = io::open_input(path);
  return read_token_list(in, path);
}

inline StopwordPolicy load_stopwords(const std::string& path) {
  StopwordPolicy policy;
  for (auto& token : load_token_list(path)) policy.dropped.insert(std::move(token));
  return policy;
}

/// Lowercases, splits on whitespace and emits every ASCII punctuation mark as
/// its own token. Tokens in the policy's drop list are removed.
inline std::vector<std::string> tokenize_definition(std::string_view text, const StopwordPolicy& policy) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty() && policy.dropped.count(current) == 0) tokens.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (detail::is_ascii_space(c)) {
      flush();
    } else if (detail::is_ascii_punct(c)) {
      flush();
      current.assign(1, c);
      flush();
    } else {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  flush();
  return tokens;
}

inline DefinitionEntry build_definition_entry(std::string_view word, const Dictionary& dict,
                                              const StopwordPolicy& policy) {
  const auto it = dict.entries.find(std::string(word));
  if (it == dict.entries.end() || it->second.empty()) {
    throw Error("no definition for '" + std::string(word) + "'");
  }
  const auto tokens = tokenize_definition(it->second.front(), policy);
  DefinitionEntry entry;
  entry.word = std::string(word);
  entry.real_term_count = std::min(tokens.size(), kDefinitionLength);
  for (std::size_t i = 0; i < kDefinitionLength; ++i) {
    entry.terms[i] = i < entry.real_term_count ? tokens[i] : std::string(kPad);
  }
  return entry;
}

/// Builds entries for every base word that has a definition. Closure is one
/// level deep: definition terms join the vocabulary but are not themselves
/// expanded.
inline VocabularyBuild build_vocabulary(const std::vector<std::string>& base, const Dictionary& dict,
                                        const StopwordPolicy& policy) {
  if (base.empty()) throw ValidationError("base vocabulary is empty");
  VocabularyBuild result;
  std::unordered_set<std::string> seen;
  for (const auto& word : base) {
    if (!seen.insert(word).second) continue;
    if (!dict.contains(word)) {
      result.skipped.push_back(word);
      continue;
    }
    result.vocabulary.add_entry(build_definition_entry(word, dict, policy));
  }
  return result;
}

/// `word<TAB>real_term_count<TAB>term1 ... term19`, one line per base word.
inline void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& word : vocab.base_words()) {
    const auto& entry = vocab.entry(word);
    out << word << '\t' << entry.real_term_count << '\t';
    for (std::size_t i = 0; i < kDefinitionLength; ++i) {
      if (i) out << ' ';
      out << entry.terms[i];
    }
    out << '\n';
  }
}

}  // namespace defvec
