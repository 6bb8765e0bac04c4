#include <string>
#include <vector>

#include "doctest.h"
#include "lt3d/base64.hpp"
#include "lt3d/bbox.hpp"
#include "lt3d/error.hpp"
#include "lt3d/image.hpp"
#include "lt3d/meshless.hpp"
#include "lt3d/protocol.hpp"
#include "lt3d/tpsrpm.hpp"
#include "synthetic.hpp"

using namespace lt3d;
using namespace lt3d::testing;

namespace {

Json reply(const Json& request) { return Json::parse(handle_message(dump_json(request))); }

std::string error_code(const Json& response) {
  REQUIRE(response.at("status") == "error");
  CHECK_FALSE(response.contains("result"));
  return response.at("error").at("code").get<std::string>();
}

Eigen::Matrix3Xd random_points(Rng& rng, int n) {
  Eigen::Matrix3Xd p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) = uniform_vec(rng, -1, 1);
  return p;
}

std::string bytes_to_string(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("frames carry a big-endian length prefix") {
    const std::vector<std::uint8_t> f = encode_frame("{}");
    CHECK(f == std::vector<std::uint8_t>{0, 0, 0, 2, '{', '}'});
    CHECK(encode_frame("") == std::vector<std::uint8_t>{0, 0, 0, 0});
    const std::vector<std::uint8_t> big = encode_frame(std::string(0x010203, 'x'));
    CHECK(big[0] == 0);
    CHECK(big[1] == 1);
    CHECK(big[2] == 2);
    CHECK(big[3] == 3);
  }

  TEST_CASE("property: frames survive arbitrary stream splits") {
    Rng rng(151);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::string> bodies;
      std::vector<std::uint8_t> stream;
      const int count = std::uniform_int_distribution<int>(1, 8)(rng);
      for (int i = 0; i < count; ++i) {
        std::string body(std::uniform_int_distribution<std::size_t>(0, 300)(rng), '\0');
        for (char& ch : body) ch = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
        const auto frame = encode_frame(body);
        stream.insert(stream.end(), frame.begin(), frame.end());
        bodies.push_back(std::move(body));
      }
      FrameDecoder decoder;
      std::vector<std::string> got;
      std::size_t at = 0;
      while (at < stream.size()) {
        const std::size_t n = std::min(stream.size() - at, std::uniform_int_distribution<std::size_t>(1, 64)(rng));
        decoder.feed(std::span(stream).subspan(at, n));
        at += n;
        while (auto body = decoder.next()) got.push_back(*body);
      }
      CHECK(got == bodies);
      CHECK_FALSE(decoder.next().has_value());
    }
  }

  TEST_CASE("oversized frames are rejected") {
    FrameDecoder decoder(16);
    const auto frame = encode_frame(std::string(17, 'a'));
    decoder.feed(frame);
    try {
      decoder.next();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
    }
    FrameDecoder partial;
    partial.feed(std::vector<std::uint8_t>{0, 0});
    CHECK_FALSE(partial.next().has_value());
  }

  TEST_CASE("base64 examples and round trips") {
    const std::string text = "foobar";
    const std::vector<std::uint8_t> raw(text.begin(), text.end());
    CHECK(base64_encode(std::span(raw).first(0)).empty());
    CHECK(base64_encode(std::span(raw).first(1)) == "Zg==");
    CHECK(base64_encode(std::span(raw).first(2)) == "Zm8=");
    CHECK(base64_encode(raw) == "Zm9vYmFy");
    CHECK(base64_decode("Zm9vYg==") == std::vector<std::uint8_t>(raw.begin(), raw.begin() + 4));
    for (const char* bad : {"Zg", "Zg=", "Z===", "Zm9v YmFy", "Zm9v\nYmFy", "Zm9*", "=Zm9"}) {
      CHECK_THROWS_AS(base64_decode(bad), Error);
    }
    Rng rng(152);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::uint8_t> bytes(std::uniform_int_distribution<std::size_t>(0, 200)(rng));
      for (auto& b : bytes) b = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 255)(rng));
      CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
  }

  TEST_CASE("malformed and unknown requests give error envelopes") {
    const Json parse = Json::parse(handle_message("{\"type\": "));
    CHECK(error_code(parse) == "parse_error");
    CHECK(error_code(reply(Json::array({1, 2}))) == "schema_error");
    CHECK(error_code(reply({{"source", 1}})) == "schema_error");
    CHECK(error_code(reply({{"type", 7}})) == "schema_error");
    const Json unknown = reply({{"type", "teleport"}, {"id", "abc"}});
    CHECK(error_code(unknown) == "unknown_type");
    CHECK(unknown.at("id") == "abc");
    CHECK(error_code(reply({{"type", "registration"}, {"source", {{0, 0}}}, {"target", {{0, 0, 0}}}})) ==
          "schema_error");
  }

  TEST_CASE("registration of a set onto itself is the identity") {
    Rng rng(153);
    const Eigen::Matrix3Xd p = random_points(rng, 4);
    const Json r = reply({{"type", "registration"}, {"id", 3}, {"source", points_to_json(p)}, {"target", points_to_json(p)}});
    REQUIRE(r.at("status") == "ok");
    CHECK_FALSE(r.contains("error"));
    CHECK(r.at("id") == 3);
    const Eigen::Matrix4d m = matrix4_from_json(r.at("result"));
    CHECK((m - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.at("result").size() == 16);
  }

  TEST_CASE("property: registration replies equal in-process results") {
    Rng rng(154);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Matrix3Xd source = random_points(rng, 4);
      Eigen::Matrix4d truth = random_rigid(rng, 1);
      truth.topLeftCorner<3, 3>() *= uniform_vec(rng, 0.5, 2).asDiagonal();
      const Eigen::Matrix3Xd target = transform_points(truth, source);
      const Json request{{"type", "registration"}, {"source", points_to_json(source)}, {"target", points_to_json(target)}};
      const Json r = reply(request);
      REQUIRE(r.at("status") == "ok");
      const Eigen::Matrix4d local =
          tpsrpm(points_from_json(request.at("source")), points_from_json(request.at("target"))).transform;
      CHECK(matrix4_from_json(r.at("result")) == local);
    }
  }

  TEST_CASE("2D replies equal in-process placements") {
    const Intrinsics k = test_intrinsics(640, 480);
    const Extrinsics e = look_at({0.5, 1.2, 3}, {0, 0.3, 0});
    const Matrix34 p = projection_matrix(k, e);
    Eigen::Matrix3d picks;
    picks << 0.5, -0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, -0.5;
    Eigen::Matrix<double, 2, 3> clicks;
    for (int i = 0; i < 3; ++i) clicks.col(i) = project_point<double>(p, Eigen::Vector3d(picks.col(i))).pixel;
    const Json request{{"type", "2D"},
                       {"source", points_to_json(picks)},
                       {"clicks", pixels_to_json(clicks)},
                       {"intrinsics", intrinsics_to_json(k)},
                       {"extrinsics", matrix4_to_json(e)}};
    const Json r = reply(request);
    REQUIRE(r.at("status") == "ok");
    CHECK((matrix4_from_json(r.at("result")) - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    const Placement local = solve_placement(intrinsics_from_json(request.at("intrinsics")),
                                            matrix4_from_json(request.at("extrinsics")),
                                            pixels_from_json(request.at("clicks")), points_from_json(request.at("source")));
    CHECK(matrix4_from_json(r.at("result")) == local.transform);
    CHECK(dump_json(r.at("result")) == dump_json(matrix4_to_json(local.transform)));

    Json two = request;
    two["clicks"].erase(2);
    CHECK(error_code(reply(two)) == "invalid_argument");
    Json skewed = request;
    skewed["extrinsics"][0] = 2.0;
    CHECK(error_code(reply(skewed)) == "invalid_argument");
  }

  TEST_CASE("bbox requests") {
    SUBCASE("an all-black mask has no rectangles") {
      const RgbaImage black(320, 180);
      const Json r = reply({{"type", "bbox"},
                            {"mask", base64_encode(encode_png(black))},
                            {"colors", {{"1", {255, 0, 0, 255}}}},
                            {"shotId", 4}});
      REQUIRE(r.at("status") == "ok");
      CHECK(r.at("result") == Json::object());
    }
    SUBCASE("rectangles match the in-process pipeline") {
      RgbaImage image(320, 180);
      for (int r = 30; r < 90; ++r)
        for (int c = 40; c < 120; ++c) image.set(r, c, {255, 0, 0, 255});
      for (int r = 100; r < 160; ++r)
        for (int c = 200; c < 290; ++c) image.set(r, c, {0, 200, 0, 255});
      const Json r = reply({{"type", "bbox"},
                            {"mask", base64_encode(encode_png(image))},
                            {"colors", {{"11", {255, 0, 0, 255}}, {"12", {0, 200, 0, 255}}}},
                            {"shotId", 9},
                            {"imageWidth", 640},
                            {"imageHeight", 360}});
      REQUIRE(r.at("status") == "ok");
      MaskImage mask;
      mask.image = image;
      mask.colors[{255, 0, 0, 255}] = 11;
      mask.colors[{0, 200, 0, 255}] = 12;
      mask.shot_id = 9;
      const auto local = bbox_from_mask(mask, 640, 360);
      REQUIRE(local.size() == 2);
      CHECK(r.at("result").size() == 2);
      for (const auto& [id, rect] : local) {
        const Json& got = r.at("result").at(std::to_string(id));
        CHECK(got.at("shotId") == 9);
        CHECK(got.at("min") == Json::array({rect.min.x(), rect.min.y()}));
        CHECK(got.at("max") == Json::array({rect.max.x(), rect.max.y()}));
      }
    }
    SUBCASE("bad color maps") {
      const std::string png = base64_encode(encode_png(RgbaImage(8, 8)));
      CHECK(error_code(reply({{"type", "bbox"}, {"mask", png}, {"colors", {{"1", {0, 0, 0, 255}}}}, {"shotId", 1}})) ==
            "invalid_argument");
      CHECK(error_code(reply({{"type", "bbox"},
                              {"mask", png},
                              {"colors", {{"1", {9, 9, 9, 255}}, {"2", {9, 9, 9, 255}}}},
                              {"shotId", 1}})) == "duplicate");
      CHECK(error_code(reply({{"type", "bbox"}, {"mask", png}, {"colors", {{"x", {9, 9, 9, 255}}}}, {"shotId", 1}})) ==
            "schema_error");
      CHECK(error_code(reply({{"type", "bbox"}, {"mask", "not base64"}, {"colors", Json::object()}, {"shotId", 1}})) ==
            "parse_error");
    }
  }

  TEST_CASE("snapping against an empty scene fails cleanly") {
    const TriangleMesh cube = unit_cube_mesh();
    const Intrinsics k = test_intrinsics(256, 144);
    const Extrinsics e = look_at({0.4, 1.4, 2.4}, {0, 0.4, 0});
    Pose pose;
    pose.position = {0, 0.4, 0};
    const RgbaImage empty(256, 144, encode_depth(kFarPlane));
    const RgbaImage element = render_depth({{&cube, pose.matrix()}}, k, e, 256, 144);
    const Json r = reply({{"type", "snap"},
                          {"sceneDepth", base64_encode(encode_png(empty))},
                          {"elementDepth", base64_encode(encode_png(element))},
                          {"intrinsics", intrinsics_to_json(k)},
                          {"extrinsics", matrix4_to_json(e)}});
    CHECK(error_code(r) == "nothing_to_snap");
    CHECK(r.at("error").at("message").get<std::string>().find("nothing to snap") != std::string::npos);
  }

  TEST_CASE("property: arbitrary bodies always produce one envelope") {
    Rng rng(155);
    const std::vector<std::string> seeds{
        R"({"type":"registration","source":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]],"target":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]]})",
        R"({"type":"bbox","mask":"","colors":{},"shotId":1})",
        R"({"type":"2D","source":[],"clicks":[],"intrinsics":{},"extrinsics":[]})"};
    for (int trial = 0; trial < 3000; ++trial) {
      std::string body = seeds[static_cast<std::size_t>(trial) % seeds.size()];
      const int edits = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int i = 0; i < edits && !body.empty(); ++i) {
        const std::size_t at = std::uniform_int_distribution<std::size_t>(0, body.size() - 1)(rng);
        body[at] = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
      }
      std::string out;
      CHECK_NOTHROW(out = handle_message(body));
      const Json r = Json::parse(out);
      CHECK((r.at("status") == "ok") != r.contains("error"));
      CHECK((r.at("status") == "ok") == r.contains("result"));
    }
  }

  TEST_CASE("invalid UTF-8 is replaced when serialising") {
    const Json j{{"message", std::string("bad \xff byte")}};
    std::string out;
    CHECK_NOTHROW(out = dump_json(j));
    CHECK(Json::parse(out).at("message").get<std::string>().find("bad ") == 0);
    CHECK(bytes_to_string(encode_frame("ab")).substr(4) == "ab");
  }
}
