#include "d2ue/error.hpp"
#include "d2ue/file_util.hpp"
#include "d2ue/pipeline.hpp"
#include "d2ue/run_config.hpp"
#include "d2ue/text.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace d2ue;

TEST(Text, FormatDoubleRoundTrips) {
    for (double v : {0.0, 0.1, 1.0 / 3.0, -2.5e-300, 1e22, 123456789.125, std::numeric_limits<double>::min()}) {
        EXPECT_EQ(text::parse_double(text::format_double(v), "v"), v);
    }
    EXPECT_EQ(text::format_double(0.5), "0.5");
    EXPECT_EQ(text::format_double(3.0), "3");
}

TEST(Text, StrictParsers) {
    EXPECT_EQ(text::parse_int(" -12 ", "n"), -12);
    EXPECT_EQ(text::parse_uint("7", "n"), 7u);
    EXPECT_THROW(text::parse_uint("-1", "n"), ConfigError);
    EXPECT_THROW(text::parse_int("3x", "n"), ConfigError);
    EXPECT_THROW(text::parse_double("", "x"), ConfigError);
    EXPECT_THROW(text::parse_double("1.5.2", "x"), ConfigError);
    try {
        text::parse_double("abc", "lambda");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
    }
}

TEST(Text, SplitTrimAndKeyValues) {
    EXPECT_EQ(text::trim("  a b \t"), "a b");
    EXPECT_EQ(text::split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
    const auto kv = text::parse_key_values("# c\n\n a = 1 \nb=x y\n", "f");
    ASSERT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv[0].key, "a");
    EXPECT_EQ(kv[0].value, "1");
    EXPECT_EQ(kv[0].line, 3u);
    EXPECT_EQ(kv[1].value, "x y");
    EXPECT_THROW(text::parse_key_values("novalue\n", "f"), ConfigError);
}

TEST(RunConfig, DefaultsAndOverrides) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.train.n_learners, 3u);
    EXPECT_EQ(c.train.lambda, 1.0);
    EXPECT_EQ(c.train.similarity, SimilarityKind::cka);
    EXPECT_EQ(c.train.epochs, 200u);
    EXPECT_EQ(c.train.batch_size, 32u);
    EXPECT_EQ(c.train.learning_rate, 5e-4);
    EXPECT_EQ(c.architecture().input_dim, 256u);
    c.set("similarity", "pearson");
    c.set("lambda", "0.25");
    c.set("seeds", "3,4");
    c.set("height", "8");
    EXPECT_EQ(c.train.similarity, SimilarityKind::pearson);
    EXPECT_EQ(c.train.lambda, 0.25);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(c.architecture().input_dim, 128u);
    EXPECT_THROW(c.set("lamda", "1"), ConfigError);
    EXPECT_THROW(c.set("lambda", "big"), ConfigError);
    EXPECT_THROW(c.set("method", "foo"), ConfigError);
}

TEST(RunConfig, TextRoundTrip) {
    RunConfig c;
    c.set("epochs", "7");
    c.set("method", "output_unc");
    c.set("reduction", "max");
    c.set("out", "somewhere/else");
    RunConfig back;
    back.apply_text(c.to_text(), "roundtrip");
    EXPECT_EQ(back.to_text(), c.to_text());
    EXPECT_EQ(back.train, c.train);
    EXPECT_EQ(back.resolved_dataset_dir(), std::filesystem::path("somewhere/else/dataset"));
    for (const auto& key : RunConfig::known_keys())
        EXPECT_NE(c.to_text().find(key + " ="), std::string::npos) << key;
}

TEST(RunConfig, ValidationErrorsMentionSource) {
    RunConfig c;
    try {
        c.apply_text("epochs = 3\nbogus = 1\n", "my.cfg");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("my.cfg"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
    c = {};
    c.set("batch_size", "1");
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(RunConfig{}.apply_file("/nonexistent/d2ue.cfg"), IoError);
}

TEST(Pipeline, SmallEndToEndRun) {
    const auto out = std::filesystem::temp_directory_path() / "d2ue_pipeline_test";
    std::filesystem::remove_all(out);
    RunConfig c;
    c.apply_text("n_train = 24\nn_test_normal = 6\nn_test_anom = 6\nheight = 8\nwidth = 8\n"
                 "hidden_dims = 16\nbottleneck_dim = 4\nepochs = 3\nbatch_size = 8\n",
                 "inline");
    c.out = out;
    c.validate();

    cmd_synth(c);
    const Dataset d = load_dataset(c.resolved_dataset_dir());
    EXPECT_EQ(d.train.images, make_benchmark(c.data).train.images);
    EXPECT_EQ(d.test.labels, make_benchmark(c.data).test.labels);

    cmd_train(c);
    const auto first = cmd_eval(c);
    EXPECT_GE(first.auroc, 0.0);
    EXPECT_LE(first.auroc, 1.0);
    const auto first_bytes = read_file(first.metrics_csv);
    const auto scores = read_file(first.scores_csv);
    EXPECT_TRUE(std::filesystem::exists(out / "eval" / "run_manifest.txt") ||
                std::filesystem::exists(out / "run_manifest.txt"));

    cmd_train(c);
    const auto second = cmd_eval(c);
    EXPECT_EQ(read_file(second.metrics_csv), first_bytes);
    EXPECT_EQ(read_file(second.scores_csv), scores);

    c.ids = {0, 7};
    const auto maps = cmd_heatmap(c);
    EXPECT_FALSE(maps.empty());
    for (const auto& p : maps) EXPECT_TRUE(std::filesystem::exists(p));
    std::filesystem::remove_all(out);
}

TEST(Pipeline, MissingDatasetIsIoError) {
    RunConfig c;
    c.out = std::filesystem::temp_directory_path() / "d2ue_pipeline_missing";
    std::filesystem::remove_all(c.out);
    EXPECT_THROW(cmd_train(c), IoError);
}
