#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "propdetect/neural/checkpoint.hpp"
#include "propdetect/neural/transformer.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/rng.hpp"

using namespace propdetect;
using namespace propdetect::neural;

namespace {

EncoderConfig small_cfg(EncoderKind kind) {
  EncoderConfig c;
  c.vocab_size = 20;
  c.hidden_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.max_seq_len = 12;
  c.encoder_kind = kind;
  return c;
}

Checkpoint make_checkpoint(EncoderKind kind, uint64_t seed) {
  auto cfg = small_cfg(kind);
  auto enc = make_encoder(cfg);
  Rng rng(seed);
  enc->init(rng);
  Checkpoint ck;
  ck.config = cfg;
  ck.step = 350;
  ck.step_fraction = 0.175;
  ck.metadata["kind"] = "mlm-pretrain";
  ck.metadata["vocab"] = "# vocabulary placeholder";
  store_params(ck, enc->named_params(), "encoder.");
  return ck;
}

}  // namespace

TEST_CASE("checkpoint round trip reproduces bit-identical encodings") {
  for (EncoderKind kind : {EncoderKind::transformer, EncoderKind::bilstm}) {
    Checkpoint ck = make_checkpoint(kind, 42);
    std::string bytes = save_checkpoint(ck);
    Checkpoint back = load_checkpoint(bytes);

    CHECK(back.step == 350);
    CHECK(back.step_fraction == 0.175);
    CHECK(back.metadata.at("kind") == "mlm-pretrain");
    CHECK(back.config.encoder_kind == kind);
    CHECK(back.config.vocab_size == 20);
    CHECK(back.tensors.size() == ck.tensors.size());

    auto original = encoder_from_checkpoint(ck);
    auto restored = encoder_from_checkpoint(back);
    std::vector<int> ids{3, 9, 14, 7};
    CHECK(original->encode(ids) == restored->encode(ids));
  }
}

TEST_CASE("checkpoint bytes are deterministic") {
  Checkpoint a = make_checkpoint(EncoderKind::transformer, 7);
  Checkpoint b = make_checkpoint(EncoderKind::transformer, 7);
  CHECK(save_checkpoint(a) == save_checkpoint(b));
  Checkpoint c = make_checkpoint(EncoderKind::transformer, 8);
  CHECK(save_checkpoint(a) != save_checkpoint(c));
}

TEST_CASE("checkpoint file round trip") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "pd_ckpt_test.bin";
  Checkpoint ck = make_checkpoint(EncoderKind::transformer, 3);
  write_checkpoint_file(ck, path.string());
  Checkpoint back = read_checkpoint_file(path.string());
  CHECK(save_checkpoint(ck) == save_checkpoint(back));
  fs::remove(path);
  CHECK_THROWS_AS(read_checkpoint_file(path.string()), LoadError);
}

TEST_CASE("load rejects damaged payloads") {
  Checkpoint ck = make_checkpoint(EncoderKind::transformer, 42);
  std::string bytes = save_checkpoint(ck);

  // truncation at assorted depths
  for (size_t keep : {size_t{0}, size_t{3}, size_t{6}, size_t{9}, size_t{40},
                      bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(load_checkpoint(bytes.substr(0, keep)), LoadError);
  }

  std::string trailing = bytes + "x";
  CHECK_THROWS_AS(load_checkpoint(trailing), LoadError);

  std::string bad_magic = bytes;
  bad_magic[0] = 'q';
  CHECK_THROWS_AS(load_checkpoint(bad_magic), LoadError);

  std::string bad_version = bytes;
  bad_version[6] = 2;  // version field follows the 6-byte magic
  try {
    load_checkpoint(bad_version);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
}

TEST_CASE("parameter loading verifies names and shapes") {
  Checkpoint ck = make_checkpoint(EncoderKind::transformer, 42);

  Checkpoint missing = ck;
  missing.tensors.erase("encoder.embed.bos");
  CHECK_THROWS_AS(encoder_from_checkpoint(missing), LoadError);

  Checkpoint misshapen = ck;
  misshapen.tensors["encoder.embed.bos"] = Matrix(2, 2);
  try {
    encoder_from_checkpoint(misshapen);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    std::string msg = e.what();
    CHECK(msg.find("encoder.embed.bos") != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}

TEST_CASE("metadata strings survive byte-level round trips") {
  Checkpoint ck = make_checkpoint(EncoderKind::transformer, 1);
  ck.metadata["split_strategy"] = "paragraph";
  ck.metadata["vocab"] = std::string("line1\nline2\n\x01\x02 binary-ish");
  Checkpoint back = load_checkpoint(save_checkpoint(ck));
  CHECK(back.metadata.at("split_strategy") == "paragraph");
  CHECK(back.metadata.at("vocab") == ck.metadata.at("vocab"));
}
