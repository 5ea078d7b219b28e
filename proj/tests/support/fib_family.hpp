#pragma once

#include <array>
#include <string_view>

// A Fibonacci method, one copy per clone type (1 to 4) and an unrelated method.
namespace fib_family {

inline constexpr std::string_view kFib = R"java(public static int fib(int i){
    int f1=0, f2=1, c=0;
    if((i == 0) || (i == 1)) return i;
    for (int j =2; j<=i; j++){
        c=f1+f2; f1=f2; f2=c;
    }
    return c;
}
)java";

inline constexpr std::string_view kFibType1 = R"java(public static int fib(int i){
    int f1=0, f2=1, c=0;
    if((i == 0) || (i == 1)) return i;
    for (int j =2; j<=i; j++){
        c=f1+f2; f1=f2; f2=c;
    }
    return c;
}
)java";

inline constexpr std::string_view kFibType2 = R"java(public static int fib(int num){
    int f1=0, f2=1, c=0;
    if((num == 0) || (num == 1)) return num;
    for (int j =2; j<=num; j++){
        c=f1+f2; f1=f2; f2=c;
    }
    return c;
}
)java";

inline constexpr std::string_view kFibType3 = R"java(public static int calFib(int num){
    int fib1=0, fib2=1, t=0;
    if((num == 1) || (num == 0)) return num;
    for (int k =2; k<=num; k++){
        t=fib1+fib2; fib1=fib2; fib2=t;
    }
    return t;
}
)java";

inline constexpr std::string_view kFibType4 = R"java(public static long calFib(long number){
    long f1=0, f2=1, c=0;
    switch(number){
        case 0:
            return 0;
        case 1:
            return 1;
        default:
            break;
    }
    while(number>=2){
        c=f1+f2; f1=f2; f2=c;
        number--;
    }
    return c;
}
)java";

inline constexpr std::string_view kMax3 = R"java(public static int max_3(int a, int b, int c) {
    int x,y;
    x = (a>b)?a:b;
    y = (x>c)?x:c;
    return y;
}
)java";

inline constexpr std::array<std::string_view, 6> kAll = {kFib, kFibType1, kFibType2, kFibType3, kFibType4, kMax3};

}  // namespace fib_family
