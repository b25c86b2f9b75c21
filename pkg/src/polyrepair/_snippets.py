# Correct code snippets used as mutation seeds. One entry per snippet, lines
# keep their indentation; the generator strips them when building pairs.

PYTHON = [
    """def bfs(graph, start):
    queue = [start]
    seen = set([start])
    while queue:
        node = queue.pop(0)
        for nxt in graph[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen""",
    """def bitcount(n):
    count = 0
    while n:
        n &= n - 1
        count += 1
    return count""",
    """def find_max(values):
    best = values[0]
    for v in values:
        if v > best:
            best = v
    return best""",
    """def find_min(values):
    best = values[0]
    for v in values:
        if v < best:
            best = v
    return best""",
    """def binary_search(arr, target):
    lo, hi = 0, len(arr) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        if arr[mid] == target:
            return mid
        elif arr[mid] < target:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1""",
    """def gcd(a, b):
    while b != 0:
        a, b = b, a % b
    return a""",
    """def is_prime(n):
    if n < 2:
        return False
    for d in range(2, n):
        if n % d == 0:
            return False
    return True""",
    """def factorial(n):
    result = 1
    for i in range(1, n + 1):
        result *= i
    return result""",
    """def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a""",
    """def count_words(text):
    counts = dict()
    for word in text.split():
        if word in counts:
            counts[word] += 1
        else:
            counts[word] = 1
    return counts""",
    """def is_palindrome(s):
    left, right = 0, len(s) - 1
    while left < right:
        if s[left] != s[right]:
            return False
        left += 1
        right -= 1
    return True""",
    """def flatten(items):
    out = []
    for item in items:
        if isinstance(item, list):
            out.extend(flatten(item))
        else:
            out.append(item)
    return out""",
    """def clamp(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x""",
    """def safe_div(a, b):
    if b == 0 or a is None:
        return None
    return a / b""",
    """def all_positive(values):
    for v in values:
        if v <= 0:
            return False
    return True""",
    """def reverse_list(items):
    i, j = 0, len(items) - 1
    while i < j:
        items[i], items[j] = items[j], items[i]
        i += 1
        j -= 1
    return items""",
    """def first_index(items, target):
    for i in range(len(items)):
        if items[i] == target:
            return i
    return None""",
    """def merge(left, right):
    result = []
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            result.append(left[i])
            i += 1
        else:
            result.append(right[j])
            j += 1
    return result + left[i:] + right[j:]""",
    """def sum_even(values):
    total = 0
    for v in values:
        if v % 2 == 0 and v > 0:
            total += v
    return total""",
    """def has_duplicates(items):
    seen = set()
    for item in items:
        if item in seen:
            return True
        seen.add(item)
    return False""",
    """def get_value(config, key, default):
    if config is None or key not in config:
        return default
    return config[key]""",
    """def power(base, exp):
    result = 1
    while exp > 0:
        if exp % 2 == 1:
            result *= base
        base *= base
        exp //= 2
    return result""",
    """def kth_smallest(values, k):
    ordered = sorted(values)
    if k >= 1 and k <= len(ordered):
        return ordered[k - 1]
    return None""",
]

JAVA = [
    """public static int bitcount(int n) {
    int count = 0;
    while (n != 0) {
        n = (n & (n - 1));
        count++;
    }
    return count;
}""",
    """public static int findMax(int[] values) {
    int best = values[0];
    for (int i = 1; i < values.length; i++) {
        if (values[i] > best) {
            best = values[i];
        }
    }
    return best;
}""",
    """public static int findMin(int[] values) {
    int best = values[0];
    for (int i = 1; i < values.length; i++) {
        best = Math.min(best, values[i]);
    }
    return best;
}""",
    """public static int binarySearch(int[] arr, int target) {
    int lo = 0;
    int hi = arr.length - 1;
    while (lo <= hi) {
        int mid = (lo + hi) / 2;
        if (arr[mid] == target) {
            return mid;
        } else if (arr[mid] < target) {
            lo = mid + 1;
        } else {
            hi = mid - 1;
        }
    }
    return -1;
}""",
    """public static int gcd(int a, int b) {
    while (b != 0) {
        int t = b;
        b = a % b;
        a = t;
    }
    return a;
}""",
    """public static boolean isPrime(int n) {
    if (n < 2) {
        return false;
    }
    for (int d = 2; d < n; d++) {
        if (n % d == 0) {
            return false;
        }
    }
    return true;
}""",
    """public static long factorial(int n) {
    long result = 1;
    for (int i = 1; i <= n; i++) {
        result *= i;
    }
    return result;
}""",
    """public static String firstName(Person person) {
    if (person == null || person.getName() == null) {
        return "";
    }
    return person.getName();
}""",
    """public static boolean isPalindrome(String s) {
    int left = 0;
    int right = s.length() - 1;
    while (left < right) {
        if (s.charAt(left) != s.charAt(right)) {
            return false;
        }
        left++;
        right--;
    }
    return true;
}""",
    """public static int clamp(int x, int lo, int hi) {
    if (x < lo) {
        return lo;
    }
    return Math.min(x, hi);
}""",
    """public static int sumEven(int[] values) {
    int total = 0;
    for (int v : values) {
        if (v % 2 == 0 && v > 0) {
            total += v;
        }
    }
    return total;
}""",
    """public static boolean allPositive(int[] values) {
    for (int v : values) {
        if (v <= 0) {
            return false;
        }
    }
    return true;
}""",
    """public static int indexOf(int[] items, int target) {
    for (int i = 0; i < items.length; i++) {
        if (items[i] == target) {
            return i;
        }
    }
    return -1;
}""",
    """public static int largest(int a, int b, int c) {
    int best = Math.max(a, b);
    best = Math.max(best, c);
    return best;
}""",
    """public static void reverse(int[] items) {
    int i = 0;
    int j = items.length - 1;
    while (i < j) {
        int tmp = items[i];
        items[i] = items[j];
        items[j] = tmp;
        i++;
        j--;
    }
}""",
    """public static boolean hasNext(Node node) {
    if (node != null && node.next != null) {
        return true;
    }
    return false;
}""",
    """public static int countMatches(String text, char c) {
    int count = 0;
    for (int i = 0; i < text.length(); i++) {
        if (text.charAt(i) == c) {
            count++;
        }
    }
    return count;
}""",
    """public static int power(int base, int exp) {
    int result = 1;
    while (exp > 0) {
        if (exp % 2 == 1) {
            result *= base;
        }
        base *= base;
        exp /= 2;
    }
    return result;
}""",
    """public static String substring(String s, int startIndex, int endIndex) {
    if ((endIndex < 0) || (endIndex < startIndex)) {
        return null;
    }
    return s.substring(startIndex, endIndex);
}""",
    """public static boolean inRange(int x, int lo, int hi) {
    if (x >= lo && x <= hi) {
        return true;
    }
    return false;
}""",
    """public static int fib(int n) {
    int a = 0;
    int b = 1;
    for (int i = 0; i < n; i++) {
        int t = a + b;
        a = b;
        b = t;
    }
    return a;
}""",
    """public static boolean isEmpty(String s) {
    if (s == null || s.length() == 0) {
        return true;
    }
    return false;
}""",
]

JAVASCRIPT = [
    """function findMax(values) {
  let best = values[0];
  for (let i = 1; i < values.length; i++) {
    best = Math.max(best, values[i]);
  }
  return best;
}""",
    """function findMin(values) {
  let best = values[0];
  for (let i = 1; i < values.length; i++) {
    if (values[i] < best) {
      best = values[i];
    }
  }
  return best;
}""",
    """function setDefault(self, key, opt) {
  if (typeof opt.default !== 'undefined') self.default(key, opt.default);
  return self;
}""",
    """function binarySearch(arr, target) {
  let lo = 0;
  let hi = arr.length - 1;
  while (lo <= hi) {
    const mid = Math.floor((lo + hi) / 2);
    if (arr[mid] === target) {
      return mid;
    } else if (arr[mid] < target) {
      lo = mid + 1;
    } else {
      hi = mid - 1;
    }
  }
  return -1;
}""",
    """function gcd(a, b) {
  while (b !== 0) {
    const t = b;
    b = a % b;
    a = t;
  }
  return a;
}""",
    """function isPrime(n) {
  if (n < 2) {
    return false;
  }
  for (let d = 2; d < n; d++) {
    if (n % d === 0) {
      return false;
    }
  }
  return true;
}""",
    """function getName(user) {
  if (user === null || user.name === undefined) {
    return '';
  }
  return user.name;
}""",
    """function factorial(n) {
  let result = 1;
  for (let i = 1; i <= n; i++) {
    result *= i;
  }
  return result;
}""",
    """function isPalindrome(s) {
  let left = 0;
  let right = s.length - 1;
  while (left < right) {
    if (s[left] !== s[right]) {
      return false;
    }
    left++;
    right--;
  }
  return true;
}""",
    """function clamp(x, lo, hi) {
  if (x < lo) {
    return lo;
  }
  return Math.min(x, hi);
}""",
    """function sumEven(values) {
  let total = 0;
  for (const v of values) {
    if (v % 2 === 0 && v > 0) {
      total += v;
    }
  }
  return total;
}""",
    """function allPositive(values) {
  for (const v of values) {
    if (v <= 0) {
      return false;
    }
  }
  return true;
}""",
    """function indexOf(items, target) {
  for (let i = 0; i < items.length; i++) {
    if (items[i] === target) {
      return i;
    }
  }
  return -1;
}""",
    """function countWords(text) {
  const counts = new Map();
  for (const word of text.split(' ')) {
    counts.set(word, (counts.get(word) || 0) + 1);
  }
  return counts;
}""",
    """function hasNext(node) {
  if (node !== null && node.next !== null) {
    return true;
  }
  return false;
}""",
    """function fib(n) {
  let a = 0;
  let b = 1;
  for (let i = 0; i < n; i++) {
    const t = a + b;
    a = b;
    b = t;
  }
  return a;
}""",
    """function isEmpty(s) {
  if (s === null || s.length === 0) {
    return true;
  }
  return false;
}""",
    """function inRange(x, lo, hi) {
  if (x >= lo && x <= hi) {
    return true;
  }
  return false;
}""",
    """function power(base, exp) {
  let result = 1;
  while (exp > 0) {
    if (exp % 2 === 1) {
      result *= base;
    }
    base *= base;
    exp = Math.floor(exp / 2);
  }
  return result;
}""",
    """function reverse(items) {
  let i = 0;
  let j = items.length - 1;
  while (i < j) {
    const tmp = items[i];
    items[i] = items[j];
    items[j] = tmp;
    i++;
    j--;
  }
  return items;
}""",
    """function largest(a, b, c) {
  let best = Math.max(a, b);
  best = Math.max(best, c);
  return best;
}""",
    """function countMatches(text, c) {
  let count = 0;
  for (let i = 0; i < text.length; i++) {
    if (text[i] === c) {
      count++;
    }
  }
  return count;
}""",
]

C = [
    """int bitcount(unsigned int n) {
    int count = 0;
    while (n != 0) {
        n = n & (n - 1);
        count++;
    }
    return count;
}""",
    """int find_max(int *values, int len) {
    int best = values[0];
    for (int i = 1; i < len; i++) {
        best = max(best, values[i]);
    }
    return best;
}""",
    """int find_min(int *values, int len) {
    int best = values[0];
    for (int i = 1; i < len; i++) {
        if (values[i] < best) {
            best = values[i];
        }
    }
    return best;
}""",
    """int binary_search(int *arr, int len, int target) {
    int lo = 0;
    int hi = len - 1;
    while (lo <= hi) {
        int mid = (lo + hi) / 2;
        if (arr[mid] == target) {
            return mid;
        } else if (arr[mid] < target) {
            lo = mid + 1;
        } else {
            hi = mid - 1;
        }
    }
    return -1;
}""",
    """int gcd(int a, int b) {
    while (b != 0) {
        int t = b;
        b = a % b;
        a = t;
    }
    return a;
}""",
    """int is_prime(int n) {
    if (n < 2) {
        return 0;
    }
    for (int d = 2; d < n; d++) {
        if (n % d == 0) {
            return 0;
        }
    }
    return 1;
}""",
    """long factorial(int n) {
    long result = 1;
    for (int i = 1; i <= n; i++) {
        result *= i;
    }
    return result;
}""",
    """int list_length(struct node *head) {
    int len = 0;
    while (head != NULL) {
        len++;
        head = head->next;
    }
    return len;
}""",
    """int is_palindrome(const char *s, int len) {
    int left = 0;
    int right = len - 1;
    while (left < right) {
        if (s[left] != s[right]) {
            return 0;
        }
        left++;
        right--;
    }
    return 1;
}""",
    """int clamp(int x, int lo, int hi) {
    if (x < lo) {
        return lo;
    }
    return min(x, hi);
}""",
    """int sum_even(int *values, int len) {
    int total = 0;
    for (int i = 0; i < len; i++) {
        if (values[i] % 2 == 0 && values[i] > 0) {
            total += values[i];
        }
    }
    return total;
}""",
    """int all_positive(int *values, int len) {
    for (int i = 0; i < len; i++) {
        if (values[i] <= 0) {
            return 0;
        }
    }
    return 1;
}""",
    """int index_of(int *items, int len, int target) {
    for (int i = 0; i < len; i++) {
        if (items[i] == target) {
            return i;
        }
    }
    return -1;
}""",
    """char *safe_copy(char *dst, const char *src, int size) {
    if (dst == NULL || src == NULL || size <= 0) {
        return NULL;
    }
    strncpy(dst, src, size - 1);
    dst[size - 1] = 0;
    return dst;
}""",
    """void reverse(int *items, int len) {
    int i = 0;
    int j = len - 1;
    while (i < j) {
        int tmp = items[i];
        items[i] = items[j];
        items[j] = tmp;
        i++;
        j--;
    }
}""",
    """int has_next(struct node *node) {
    if (node != NULL && node->next != NULL) {
        return 1;
    }
    return 0;
}""",
    """int count_char(const char *text, char c) {
    int count = 0;
    for (int i = 0; text[i] != 0; i++) {
        if (text[i] == c) {
            count++;
        }
    }
    return count;
}""",
    """int power(int base, int exp) {
    int result = 1;
    while (exp > 0) {
        if (exp % 2 == 1) {
            result *= base;
        }
        base *= base;
        exp /= 2;
    }
    return result;
}""",
    """int in_range(int x, int lo, int hi) {
    if (x >= lo && x <= hi) {
        return 1;
    }
    return 0;
}""",
    """int fib(int n) {
    int a = 0;
    int b = 1;
    for (int i = 0; i < n; i++) {
        int t = a + b;
        a = b;
        b = t;
    }
    return a;
}""",
    """int largest(int a, int b, int c) {
    int best = max(a, b);
    best = max(best, c);
    return best;
}""",
    """void free_list(struct node *head) {
    while (head != NULL) {
        struct node *next = head->next;
        free(head);
        head = next;
    }
}""",
]

BANK = {"python": PYTHON, "java": JAVA, "javascript": JAVASCRIPT, "c": C}
