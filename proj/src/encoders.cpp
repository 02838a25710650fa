#include "relabel/encoders.hpp"

#include <iomanip>

namespace relabel::encoders {

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "mean") return EncoderKind::mean;
  if (s == "caml") return EncoderKind::caml;
  if (s == "bigru") return EncoderKind::bigru;
  throw data_error("unknown model kind: \"" + s + "\" (expected mean, caml or bigru)");
}

const std::string& encoder_kind_to_string(EncoderKind k) {
  static const std::string names[] = {"mean", "caml", "bigru"};
  return names[static_cast<int>(k)];
}

EmbeddingFile load_embedding_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(is, header)) throw data_error("embedding file is empty: " + path);
  std::istringstream hs(header);
  long count = 0, dim = 0;
  if (!(hs >> count >> dim) || count < 1 || dim < 1)
    throw data_error("embedding file header must be \"|V| e\": " + path);

  EmbeddingFile f;
  f.vectors = autodiff::Tensor<double>({static_cast<int>(count), static_cast<int>(dim)});
  std::string line;
  for (long i = 0; i < count; ++i) {
    if (!std::getline(is, line))
      throw data_error("embedding file ends before the declared " + std::to_string(count) +
                       " rows: " + path);
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token))
      throw data_error(path + ": embedding row " + std::to_string(i + 2) + " is blank");
    f.tokens.push_back(token);
    for (long j = 0; j < dim; ++j) {
      double x;
      if (!(ls >> x))
        throw data_error(path + ": embedding row " + std::to_string(i + 2) +
                         " has fewer than " + std::to_string(dim) + " values");
      f.vectors.at(static_cast<int>(i), static_cast<int>(j)) = x;
    }
  }
  return f;
}

void save_embedding_text(const EmbeddingFile& f, const std::string& path) {
  if (static_cast<int>(f.tokens.size()) != f.vectors.rows())
    throw error("embedding token count does not match the vector rows");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write embedding file: " + path);
  os << f.tokens.size() << " " << f.vectors.cols() << "\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < f.tokens.size(); ++i) {
    os << f.tokens[i];
    for (int j = 0; j < f.vectors.cols(); ++j)
      os << " " << f.vectors.at(static_cast<int>(i), j);
    os << "\n";
  }
}

}  // namespace relabel::encoders
