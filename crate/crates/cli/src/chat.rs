//! Chat framing applied to samples at emission time.

use resat_core::samplegen::TrainingSample;
use std::str::FromStr;

const CHATML_SYSTEM: &str = "You are a helpful assistant.";
const DEEPSEEK_SYSTEM: &str = "You are an AI programming assistant, utilizing the DeepSeek Coder model, developed by DeepSeek Company, and you only answer questions related to computer science. For politically sensitive questions, security and privacy issues, and other non-computer science questions, you will refuse to answer.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChatTemplate {
    #[default]
    None,
    /// `<|im_start|>` framing used by Qwen-family models.
    ChatMl,
    /// Instruction/Response framing used by DeepSeek-Coder instruct models.
    DeepSeek,
}

impl FromStr for ChatTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(ChatTemplate::None),
            "chatml" => Ok(ChatTemplate::ChatMl),
            "deepseek" => Ok(ChatTemplate::DeepSeek),
            other => Err(format!("unknown chat template {other:?} (expected none, chatml or deepseek)")),
        }
    }
}

impl ChatTemplate {
    pub fn wrap_input(self, prompt: &str) -> String {
        match self {
            ChatTemplate::None => prompt.to_string(),
            ChatTemplate::ChatMl => format!(
                "<|im_start|>system\n{CHATML_SYSTEM}<|im_end|>\n<|im_start|>user\n{prompt}<|im_end|>\n<|im_start|>assistant\n"
            ),
            ChatTemplate::DeepSeek => {
                format!("{DEEPSEEK_SYSTEM}\n### Instruction:\n{prompt}\n### Response:\n")
            }
        }
    }

    pub fn wrap_output(self, answer: &str) -> String {
        match self {
            ChatTemplate::None => answer.to_string(),
            ChatTemplate::ChatMl => format!("{answer}<|im_end|>\n"),
            ChatTemplate::DeepSeek => format!("{answer}\n<|EOT|>"),
        }
    }

    /// Wraps both sides of a sample; metadata, including the token count of
    /// the unwrapped text, is left alone.
    pub fn apply(self, sample: &mut TrainingSample) {
        if self == ChatTemplate::None {
            return;
        }
        sample.input_text = self.wrap_input(&sample.input_text);
        sample.output_text = self.wrap_output(&sample.output_text);
    }
}
