/** UI chrome strings; annotated text itself is always rendered verbatim. */

export interface Strings {
  title: string;
  loading: string;
  comment: string;
  reference: string;
  optionA: string;
  optionB: string;
  voteA: string;
  voteB: string;
  voteBoth: string;
  progress: (done: number, total: number) => string;
  done: string;
  doneDetail: string;
  errorTitle: string;
  retry: string;
  duplicateSkipped: string;
}

const cs: Strings = {
  title: "Hodnocení extrahovaných tvrzení",
  loading: "Načítám…",
  comment: "Komentář",
  reference: "Referenční tvrzení",
  optionA: "Možnost A",
  optionB: "Možnost B",
  voteA: "A je lepší",
  voteB: "B je lepší",
  voteBoth: "Obě stejně",
  progress: (done, total) => `Hotovo ${done} z ${total}`,
  done: "Hotovo, děkujeme!",
  doneDetail: "Všechna srovnání v této relaci jsou vyhodnocena.",
  errorTitle: "Spojení se nezdařilo",
  retry: "Zkusit znovu",
  duplicateSkipped: "Tato úloha už byla ohodnocena, pokračuji další.",
};

const en: Strings = {
  title: "Extracted claim preference study",
  loading: "Loading…",
  comment: "Comment",
  reference: "Reference claims",
  optionA: "Option A",
  optionB: "Option B",
  voteA: "A is better",
  voteB: "B is better",
  voteBoth: "Both equally",
  progress: (done, total) => `Done ${done} of ${total}`,
  done: "All done, thank you!",
  doneDetail: "Every comparison in this session has been judged.",
  errorTitle: "Connection failed",
  retry: "Retry",
  duplicateSkipped: "This task was already judged; moving on.",
};

export function strings(lang: string): Strings {
  return lang === "en" ? en : cs;
}
