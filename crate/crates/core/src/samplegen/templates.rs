//! Prompt templates for the four sample kinds.

pub const FILE_LOC_INSTRUCTION: &str = "Please look through the following GitHub problem description and Repository structure and provide a list of files that one would need to edit to fix the problem.";

pub const FUNC_LOC_INSTRUCTION: &str = "Please look through the following GitHub Problem Description and the Skeleton of Relevant Files.\nIdentify all locations that need inspection or editing to fix the problem, including directly related areas as well as any potentially related global variables, functions, and classes.";

pub const LINE_LOC_INSTRUCTION: &str = "Please review the following GitHub problem description and relevant files, and provide a set of locations that need to be edited to fix the issue.\nThe locations can be specified as class names, function or method names, or exact line numbers that require modification.";

pub const LINE_LOC_CLOSING: &str = "Please provide the class name, function or method name, or the exact line numbers that need to be edited.";

pub const CODE_EDIT_INSTRUCTION: &str = "You will be provided with an issue statement explaining a problem to resolve and a partial code base. Please first localize the bug based on the issue statement, and then generate *SEARCH/REPLACE* edits to fix the issue.";

pub const CODE_EDIT_CLOSING: &str = "Please first localize the bug based on the issue statement, and then generate *SEARCH/REPLACE* edits to fix the issue.";

fn block(out: &mut String, heading: &str, body: &str) {
    out.push_str(heading);
    out.push('\n');
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
}

fn prompt(instruction: &str, problem: &str, heading: &str, body: &str, closing: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(instruction);
    out.push_str("\n\n");
    block(&mut out, "Problem Description:", problem);
    out.push('\n');
    block(&mut out, heading, body);
    if let Some(c) = closing {
        out.push('\n');
        out.push_str(c);
        out.push('\n');
    }
    out
}

pub fn file_loc(problem: &str, structure: &str) -> String {
    prompt(FILE_LOC_INSTRUCTION, problem, "Repository Structure:", structure, None)
}

pub fn func_loc(problem: &str, skeletons: &str) -> String {
    prompt(FUNC_LOC_INSTRUCTION, problem, "Skeleton of Relevant Files:", skeletons, None)
}

pub fn line_loc(problem: &str, contents: &str) -> String {
    prompt(LINE_LOC_INSTRUCTION, problem, "File Contents:", contents, Some(LINE_LOC_CLOSING))
}

pub fn code_edit(problem: &str, contents: &str) -> String {
    prompt(CODE_EDIT_INSTRUCTION, problem, "File Contents:", contents, Some(CODE_EDIT_CLOSING))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_loc_layout() {
        let p = file_loc("Crash on empty input", "r/\n  a.py\n");
        assert!(p.starts_with(FILE_LOC_INSTRUCTION));
        assert!(p.ends_with("Problem Description:\nCrash on empty input\n\nRepository Structure:\nr/\n  a.py\n"));
    }

    #[test]
    fn closing_line_last() {
        assert!(code_edit("x", "y").ends_with(&format!("File Contents:\ny\n\n{CODE_EDIT_CLOSING}\n")));
    }
}
