#pragma once

// Word vectors: the latent codes of a word's 100 images, concatenated in
// image-set order. Slot k of the image-set owns components
// [latent * k, latent * (k + 1)).

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "defvec/autoencoder.hpp"
#include "defvec/error.hpp"
#include "defvec/image.hpp"
#include "defvec/io.hpp"
#include "defvec/vocab.hpp"

namespace defvec {

struct WordEmbedding {
  std::string word;
  std::vector<float> vector;

  friend bool operator==(const WordEmbedding&, const WordEmbedding&) = default;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<WordEmbedding>& rows() const { return rows_; }

  void add(WordEmbedding row) {
    if (row.vector.size() != dim_) {
      throw ValidationError("embedding for '" + row.word + "' has " + std::to_string(row.vector.size()) +
                            " components, table dimension is " + std::to_string(dim_));
    }
    if (!index_.emplace(row.word, rows_.size()).second) {
      throw ValidationError("duplicate word '" + row.word + "' in embedding table");
    }
    rows_.push_back(std::move(row));
  }

  /// nullptr when the word has no row.
  const std::vector<float>* find(const std::string& word) const {
    const auto it = index_.find(word);
    return it == index_.end() ? nullptr : &rows_[it->second].vector;
  }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.rows_ == b.rows_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<WordEmbedding> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Encodes every image of the set in one batch and concatenates the latents.
inline WordEmbedding embed_word(const Autoencoder<float>& model, const ImageSet& image_set) {
  const auto latents = encode(model, make_batch<float>(image_set.images));
  return {image_set.word, latents.values()};
}

/// One row per base word, in vocabulary order. Words are split across
/// `threads` workers; each row is computed independently so the table does
/// not depend on the worker count.
inline EmbeddingTable embed_vocabulary(const Autoencoder<float>& model, const Vocabulary& vocab,
                                       const ImageSource& source, std::size_t threads = 1,
                                       const std::function<void(std::size_t, const std::string&)>& on_word = {}) {
  const auto& words = vocab.base_words();
  std::vector<WordEmbedding> rows(words.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  const auto worker = [&] {
    while (true) {
      const auto i = next.fetch_add(1);
      if (i >= words.size()) return;
      try {
        rows[i] = embed_word(model, assemble_image_set(vocab.entry(words[i]), source));
        if (on_word) {
          std::lock_guard lock(mutex);
          on_word(i, words[i]);
        }
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = words.size();
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, words.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t dim = kImageSetSize * model.latent_channels();
  EmbeddingTable table(dim);
  for (auto& row : rows) table.add(std::move(row));
  return table;
}

enum class TableFormat { text, binary };

inline constexpr char kTableMagic[4] = {'D', 'F', 'V', 'E'};
inline constexpr std::uint32_t kTableVersion = 1;

/// Header `N dim`, then `word v1 ... v_dim` with 9 significant digits.
inline void write_table_text(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[32];
  for (const auto& row : table.rows()) {
    out << row.word;
    for (float v : row.vector) {
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
}

inline void write_table_binary(std::ostream& out, const EmbeddingTable& table) {
  out.write(kTableMagic, 4);
  io::write_le<std::uint32_t>(out, kTableVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.size()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
  for (const auto& row : table.rows()) {
    if (row.word.size() > 0xFFFF) throw Error("word too long for binary table: '" + row.word.substr(0, 32) + "...'");
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(row.word.size()));
    out.write(row.word.data(), static_cast<std::streamsize>(row.word.size()));
    for (float v : row.vector) io::write_f32(out, v);
  }
}

inline EmbeddingTable read_table_binary(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kTableMagic, 4)) {
    throw ValidationError("not a binary embedding table");
  }
  const auto version = io::read_le<std::uint32_t>(in, "table version");
  if (version != kTableVersion) throw ValidationError("unsupported table version " + std::to_string(version));
  const auto count = io::read_le<std::uint32_t>(in, "row count");
  const auto dim = io::read_le<std::uint32_t>(in, "dimension");
  EmbeddingTable table(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto what = "row " + std::to_string(r);
    WordEmbedding row;
    row.word.resize(io::read_le<std::uint16_t>(in, what));
    if (!in.read(row.word.data(), static_cast<std::streamsize>(row.word.size()))) {
      throw ValidationError("truncated file while reading " + what);
    }
    row.vector.resize(dim);
    for (auto& v : row.vector) v = io::read_f32(in, what);
    table.add(std::move(row));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes after embedding table");
  return table;
}

inline EmbeddingTable read_table_text(std::istream& in) {
  std::string line;
  if (!io::read_line(in, line)) throw ValidationError("malformed header at line 1: empty file");
  std::size_t count = 0, dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra) || dim == 0) {
      throw ValidationError("malformed header at line 1: expected 'N dim'");
    }
  }
  EmbeddingTable table(dim);
  std::size_t line_no = 1;
  while (io::read_line(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    const auto where = " at line " + std::to_string(line_no);
    const char* p = line.c_str();
    const char* end = p + line.size();
    while (p < end && *p == ' ') ++p;
    const char* word_end = p;
    while (word_end < end && *word_end != ' ') ++word_end;
    WordEmbedding row{std::string(p, word_end), {}};
    row.vector.reserve(dim);
    p = word_end;
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p >= end) break;
      char* next = nullptr;
      const float v = std::strtof(p, &next);
      if (next == p) throw ValidationError("malformed number" + where);
      row.vector.push_back(v);
      p = next;
    }
    if (row.vector.size() != dim) {
      throw ValidationError("row has " + std::to_string(row.vector.size()) + " components, header says " +
                            std::to_string(dim) + where);
    }
    try {
      table.add(std::move(row));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what() + where);
    }
  }
  if (table.size() != count) {
    throw ValidationError("header announces " + std::to_string(count) + " rows, file has " +
                          std::to_string(table.size()));
  }
  return table;
}

inline void save_table(const std::string& path, const EmbeddingTable& table, TableFormat format) {
  auto out = io::open_output(path, format == TableFormat::binary);
  if (format == TableFormat::binary) {
    write_table_binary(out, table);
  } else {
    write_table_text(out, table);
  }
  if (!out) throw Error("failed writing embedding table '" + path + "'");
}

/// Detects the format from the leading magic bytes.
inline EmbeddingTable load_table(const std::string& path) {
  auto in = io::open_input(path, true);
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::string(magic, 4) == std::string(kTableMagic, 4);
  in.clear();
  in.seekg(0);
  try {
    return binary ? read_table_binary(in) : read_table_text(in);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + " in '" + path + "'");
  }
}

}  // namespace defvec
