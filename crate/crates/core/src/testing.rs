//! Shared fixtures: the running example program and a hand-written witness for it.

use crate::witness::{read_graphml, Witness};

pub const COUNTDOWN: &str = "int main() {
\tunsigned int n = nondet();
\tunsigned int x = n, y = 0;
\twhile(x > 0){
\t\t x--;
\t\t y++; }
  // Safety property
\tif (!(n == y)) {
\t\tError: return 1; }
\treturn 0;
}
";

/// Correctness witness for [`COUNTDOWN`] carrying `n == x+y` at the loop head.
pub const COUNTDOWN_WITNESS: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance">
  <key id="witness-type" attr.name="witness-type" attr.type="string" for="graph"/>
  <key id="invariant" attr.name="invariant" attr.type="string" for="node"/>
  <key id="invariant.scope" attr.name="invariant.scope" attr.type="string" for="node"/>
  <key id="entry" attr.name="isEntryNode" attr.type="boolean" for="node">
    <default>false</default>
  </key>
  <key id="startline" attr.name="startline" attr.type="int" for="edge"/>
  <key id="endline" attr.name="endline" attr.type="int" for="edge"/>
  <key id="control" attr.name="control" attr.type="string" for="edge"/>
  <key id="enterLoopHead" attr.name="enterLoopHead" attr.type="boolean" for="edge"/>
  <key id="enterFunction" attr.name="enterFunction" attr.type="string" for="edge"/>
  <graph edgedefault="directed">
    <data key="witness-type">correctness_witness</data>
    <node id="q0">
      <data key="entry">true</data>
    </node>
    <node id="q1"/>
    <node id="q2"/>
    <node id="q3">
      <data key="invariant">n == x+y</data>
      <data key="invariant.scope">main</data>
    </node>
    <node id="q4"/>
    <node id="q5"/>
    <edge source="q0" target="q1">
      <data key="enterFunction">main</data>
    </edge>
    <edge source="q1" target="q2">
      <data key="startline">2</data>
      <data key="endline">2</data>
    </edge>
    <edge source="q2" target="q3">
      <data key="startline">3</data>
      <data key="endline">3</data>
      <data key="enterLoopHead">true</data>
    </edge>
    <edge source="q3" target="q4">
      <data key="startline">4</data>
      <data key="endline">4</data>
      <data key="control">condition-true</data>
    </edge>
    <edge source="q4" target="q3">
      <data key="startline">6</data>
      <data key="endline">6</data>
      <data key="enterLoopHead">true</data>
    </edge>
    <edge source="q3" target="q5">
      <data key="startline">4</data>
      <data key="endline">4</data>
      <data key="control">condition-false</data>
    </edge>
  </graph>
</graphml>
"#;

/// [`COUNTDOWN_WITNESS`] with its program hash set.
pub fn countdown_witness(program_hash: &str) -> Witness {
    let mut w = read_graphml(COUNTDOWN_WITNESS).expect("fixture parses");
    w.metadata.program_hash = program_hash.to_string();
    w
}
