#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// stderr is merged into the captured output.
Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CENET_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("cenet-cli-" + std::to_string(rd()));
    fs::create_directories(dir);
    const auto r = cli("synth --out " + data() + " --entities 20 --timestamps 15 --per-snapshot 10 --seed 3");
    REQUIRE(r.code == 0);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string data() const { return (dir / "data").string(); }
  std::string run(const std::string& name) const { return (dir / name).string(); }
};

const char* kTrain = " --dim 8 --batch 64 --lr 0.01 --epochs1 2 --epochs2 2";

}  // namespace

TEST_CASE("synth writes a dataset and its labels") {
  Workspace w;
  const fs::path d = w.data();
  CHECK(fs::exists(d / "train.txt"));
  CHECK(fs::exists(d / "stat.txt"));
  CHECK(fs::exists(d / "labels.tsv"));
  const auto manifest = json::parse(slurp(d / "manifest.json"));
  CHECK(manifest["command"] == "synth");
  CHECK(manifest["outputs"].contains((d / "train.txt").string()));
}

TEST_CASE("stats in text and JSON") {
  Workspace w;
  const auto text = cli("stats --data " + w.data());
  CHECK(text.code == 0);
  CHECK(text.out.find("entities") != std::string::npos);
  const auto js = cli("stats --data " + w.data() + " --json");
  REQUIRE(js.code == 0);
  CHECK(json::parse(js.out)["entities"] == 20);
}

TEST_CASE("train writes checkpoint, loss logs and manifest") {
  Workspace w;
  const auto r = cli("train --data " + w.data() + kTrain + " --out " + w.run("r"));
  REQUIRE(r.code == 0);
  const fs::path out = w.run("r");
  for (const char* f : {"model.bin", "model.json", "loss_stage1.tsv", "loss_stage2.tsv", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  CHECK(count_lines(slurp(out / "loss_stage1.tsv")) == 3);
  const auto m = json::parse(slurp(out / "manifest.json"));
  CHECK(m["config"]["dim"] == "8");
  CHECK(m["inputs"].size() >= 3);
  CHECK(m["outputs"][(out / "model.bin").string()].get<std::string>().size() == 40);
}

TEST_CASE("config file with flag override") {
  Workspace w;
  std::ofstream(w.dir / "run.cfg") << "# small\ndim = 4\nepochs1 = 1\nepochs2 = 0\nlr=0.01\n";
  const auto r = cli("train --config " + (w.dir / "run.cfg").string() + " --data " + w.data() + " --dim 6 --out " +
                     w.run("c"));
  REQUIRE(r.code == 0);
  const auto m = json::parse(slurp(fs::path(w.run("c")) / "manifest.json"));
  CHECK(m["config"]["dim"] == "6");
  CHECK(m["config"]["epochs1"] == "1");
}

TEST_CASE("zero epochs save the initialization") {
  Workspace w;
  REQUIRE(cli("train --data " + w.data() + " --dim 8 --epochs1 0 --epochs2 0 --out " + w.run("a")).code == 0);
  REQUIRE(cli("train --data " + w.data() + " --dim 8 --epochs1 0 --epochs2 0 --out " + w.run("b")).code == 0);
  CHECK(slurp(fs::path(w.run("a")) / "model.bin") == slurp(fs::path(w.run("b")) / "model.bin"));
  CHECK(count_lines(slurp(fs::path(w.run("a")) / "loss_stage1.tsv")) == 1);
}

TEST_CASE("evaluate prints one row per split and direction") {
  Workspace w;
  REQUIRE(cli("train --data " + w.data() + kTrain + " --out " + w.run("r")).code == 0);
  const auto ckpt = (fs::path(w.run("r")) / "model.bin").string();
  const auto metrics = w.run("metrics.json");
  const auto r = cli("evaluate --checkpoint " + ckpt + " --data " + w.data() + " --split valid,test --out " + metrics);
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 1 + 2 * 5);
  CHECK(r.out.rfind("split\tdirection\tmask", 0) == 0);
  const auto j = json::parse(slurp(metrics));
  CHECK(j["splits"].contains("valid"));
  CHECK(j["splits"]["test"]["mask"] == "soft");
  CHECK(slurp(metrics).find(w.dir.string()) == std::string::npos);
  CHECK(fs::exists(w.run("metrics.manifest.json")));

  const auto none = cli("evaluate --checkpoint " + ckpt + " --data " + w.data() + " --mask none --out " +
                        w.run("none.json"));
  CHECK(none.code == 0);
  CHECK(none.out.find("\tnone\t") != std::string::npos);
}

TEST_CASE("predict clamps k and supports the subject direction") {
  Workspace w;
  REQUIRE(cli("train --data " + w.data() + kTrain + " --out " + w.run("r")).code == 0);
  const auto base = "predict --checkpoint " + (fs::path(w.run("r")) / "model.bin").string() + " --data " + w.data();
  const auto text = cli(base + " 1 2 14 --k 100 --direction subject");
  REQUIRE(text.code == 0);
  CHECK(count_lines(text.out) == 2 + 20);
  const auto js = cli(base + " 1 2 14 --k 3 --json --mask hard");
  REQUIRE(js.code == 0);
  const auto p = json::parse(js.out);
  CHECK(p["top"].size() == 3);
  CHECK(p["mask"] == "hard");
  const auto bad = cli(base + " 99 2 14");
  CHECK(bad.code == 2);
  CHECK(bad.out.rfind("error\tbounds\t", 0) == 0);
  CHECK(count_lines(bad.out) == 1);
}

TEST_CASE("bad input fails with a one-line error") {
  Workspace w;
  const auto unknown = cli("train --data " + w.data() + " --gamma 3");
  CHECK(unknown.code == 64);
  CHECK(count_lines(unknown.out) == 1);
  CHECK(unknown.out.find("alpha") != std::string::npos);

  const auto range = cli("train --data " + w.data() + " --alpha 2 --out " + w.run("x"));
  CHECK(range.code == 5);
  CHECK(range.out.rfind("error\tconfig\t", 0) == 0);

  const auto single = cli("train --data " + w.data() + " --precision single --out " + w.run("x"));
  CHECK(single.code == 5);

  std::ofstream(w.dir / "broken.txt") << "not a checkpoint";
  const auto corrupt = cli("evaluate --checkpoint " + (w.dir / "broken.txt").string() + " --data " + w.data());
  CHECK(corrupt.code != 0);
  CHECK(count_lines(corrupt.out) == 1);

  const auto missing = cli("stats --data " + w.run("nothing"));
  CHECK(missing.code == 6);
  CHECK(cli("").code == 64);
}

TEST_CASE("identical runs produce identical bytes") {
  Workspace w;
  for (const char* name : {"a", "b"}) {
    REQUIRE(cli("train --data " + w.data() + kTrain + " --seed 11 --out " + w.run(name)).code == 0);
    const auto ckpt = (fs::path(w.run(name)) / "model.bin").string();
    REQUIRE(cli("evaluate --checkpoint " + ckpt + " --data " + w.data() + " --out " + w.run(name) + "/metrics.json")
                .code == 0);
  }
  for (const char* f : {"model.bin", "metrics.json", "loss_stage1.tsv", "loss_stage2.tsv"}) {
    CHECK_MESSAGE(slurp(fs::path(w.run("a")) / f) == slurp(fs::path(w.run("b")) / f), f);
  }
}
