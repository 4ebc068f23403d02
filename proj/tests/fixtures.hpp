#pragma once

// Small hand-written circuits shared by several test files.

namespace htrl::test {

// Triggers a, b and inverted c fire the payload on e, which reaches y
// through a buffer.
inline constexpr const char* kXorSplit = R"(
module xor_split(a, b, c, d, y, z);
  input a, b, c, d;
  output y, z;
  wire e;
  xor g1 (e, d, a);
  buf g2 (y, e);
  or g3 (z, b, c);
endmodule
)";

inline constexpr const char* kAnd2 = R"(
module and2(a, b, y);
  input a, b;
  output y;
  and g (y, a, b);
endmodule
)";

inline constexpr const char* kAnd8 = R"(
module and8(i0, i1, i2, i3, i4, i5, i6, i7, y);
  input i0, i1, i2, i3, i4, i5, i6, i7;
  output y;
  wire t0, t1, t2, t3, t4, t5;
  and a0 (t0, i0, i1);
  and a1 (t1, i2, i3);
  and a2 (t2, i4, i5);
  and a3 (t3, i6, i7);
  and a4 (t4, t0, t1);
  and a5 (t5, t2, t3);
  and a6 (y, t4, t5);
endmodule
)";

}  // namespace htrl::test
